"""Mesh-refinement studies: configuration, per-level solves and observed orders.

Config files are line oriented ``key = value`` text; ``#`` starts a comment::

    domain    = disk 1.0            # or: square -1 1
    interface = circle 0 0 0.38     # or: star r0 amp lobes phase | affine nx ny offset
    beta      = 1 1000              # beta_minus beta_plus
    kappa     = 1
    levels    = 2 3 4               # refinement exponents
    sizes     = 20 40 80            # optional explicit rings / cells per side
    k         = 10
    reference = oracle              # or: self 256
    on_multiple = raise             # multiple crossings per edge: raise | warn | ignore
    tol       = 1e-10
    out       = results

A level exponent ``L`` means ``n = 2**L`` cells per side on the square and
``rings = 5 * 2**L`` on the disk; ``sizes`` overrides the exponents.
"""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .assembly import assemble_load, assemble_system, broken_norms
from .basis import build_bases, interpolate
from .eigsolve import solve_gevp, solve_source
from .exceptions import IFEMError, InvalidParameterError
from .geometry import LevelSetInterface
from .mesh import gen_disk_mesh, gen_square_mesh
from .oracle import CircularProblem, circular_eigenvalues

CLUSTER_TOL = 1e-6
DISK_RING_BASE = 5


def _floats(tokens, key, count=None):
    try:
        vals = tuple(float(t) for t in tokens)
    except ValueError:
        raise InvalidParameterError(f"{key}: expected numbers, got {' '.join(tokens)!r}") from None
    if count is not None and len(vals) != count:
        raise InvalidParameterError(f"{key}: expected {count} numbers, got {len(vals)}")
    return vals


def _ints(tokens, key):
    vals = _floats(tokens, key)
    if any(v != int(v) for v in vals):
        raise InvalidParameterError(f"{key}: expected integers")
    return tuple(int(v) for v in vals)


@dataclass(frozen=True)
class StudyConfig:
    """Everything needed to run one refinement study."""

    domain: str = "disk"
    domain_params: tuple = (1.0,)
    interface: str = "circle"
    interface_params: tuple = (0.0, 0.0, 0.38)
    beta: tuple = (1.0, 1000.0)
    kappa: float = 1.0
    levels: tuple = (2, 3, 4)
    sizes: tuple | None = None
    k: int = 10
    reference: str = "oracle"
    reference_size: int | None = None
    on_multiple: str = "raise"
    tol: float = 1e-10
    out: str | None = None

    def __post_init__(self):
        if self.domain not in ("disk", "square"):
            raise InvalidParameterError(f"domain must be disk or square, got {self.domain!r}")
        if self.domain == "disk" and (len(self.domain_params) != 1 or self.domain_params[0] <= 0):
            raise InvalidParameterError("disk domain needs one positive radius")
        if self.domain == "square" and (len(self.domain_params) != 2
                                        or not self.domain_params[0] < self.domain_params[1]):
            raise InvalidParameterError("square domain needs a < b")
        nparams = {"circle": 3, "star": 4, "affine": 3}
        if self.interface not in nparams:
            raise InvalidParameterError(f"unknown interface kind {self.interface!r}")
        if len(self.interface_params) != nparams[self.interface]:
            raise InvalidParameterError(
                f"{self.interface} interface takes {nparams[self.interface]} parameters")
        if len(self.beta) != 2 or min(self.beta) <= 0:
            raise InvalidParameterError("beta must be two positive numbers")
        if not self.kappa > 0:
            raise InvalidParameterError("kappa must be positive")
        if self.k < 1:
            raise InvalidParameterError("k must be at least 1")
        sizes = self.level_sizes()
        if any(s < 1 for s in sizes):
            raise InvalidParameterError(f"mesh sizes must be positive, got {sizes}")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise InvalidParameterError(f"levels must be strictly increasing, got sizes {sizes}")
        if self.reference not in ("oracle", "self"):
            raise InvalidParameterError("reference must be oracle or self")
        if self.reference == "self":
            if self.reference_size is None or self.reference_size <= sizes[-1]:
                raise InvalidParameterError("self reference needs a size finer than every level")
        elif not (self.domain == "disk" and self.interface == "circle"
                  and self.interface_params[:2] == (0.0, 0.0)):
            raise InvalidParameterError("the oracle reference needs a disk with a centred circle")
        if self.on_multiple not in ("raise", "warn", "ignore"):
            raise InvalidParameterError("on_multiple must be raise, warn or ignore")

    def level_sizes(self):
        """Rings (disk) or cells per side (square) of every level."""
        if self.sizes is not None:
            return tuple(int(s) for s in self.sizes)
        if self.domain == "disk":
            return tuple(DISK_RING_BASE * 2 ** int(L) for L in self.levels)
        return tuple(2 ** int(L) for L in self.levels)

    def make_interface(self):
        bm, bp = self.beta
        p = self.interface_params
        if self.interface == "circle":
            return LevelSetInterface.circle(p[2], center=(p[0], p[1]), beta_minus=bm, beta_plus=bp)
        if self.interface == "star":
            return LevelSetInterface.star(p[0], p[1], int(p[2]), p[3], beta_minus=bm, beta_plus=bp)
        return LevelSetInterface.affine((p[0], p[1]), p[2], beta_minus=bm, beta_plus=bp)

    def make_mesh(self, size):
        if self.domain == "disk":
            return gen_disk_mesh(size, self.domain_params[0])
        return gen_square_mesh(size, self.domain_params)

    def circular_problem(self):
        return CircularProblem(R_I=self.interface_params[2], R_O=self.domain_params[0],
                               beta_minus=self.beta[0], beta_plus=self.beta[1])

    def with_overrides(self, **kw):
        """Copy with the non-``None`` keyword values replaced."""
        kw = {k: v for k, v in kw.items() if v is not None}
        if "levels" in kw:
            kw.setdefault("sizes", None)
        return replace(self, **kw)

    @classmethod
    def from_text(cls, text):
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidParameterError(f"line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            tok = value.split()
            if not tok:
                raise InvalidParameterError(f"line {lineno}: empty value for {key!r}")
            try:
                kw.update(_parse_entry(key, tok))
            except InvalidParameterError as exc:
                raise InvalidParameterError(f"line {lineno}: {exc}") from None
        return cls(**kw)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())

    def to_text(self):
        """Config text that parses back to an equal config."""
        g = lambda vals: " ".join(f"{v:.17g}" for v in vals)  # noqa: E731
        lines = [f"domain = {self.domain} {g(self.domain_params)}",
                 f"interface = {self.interface} {g(self.interface_params)}",
                 f"beta = {g(self.beta)}",
                 f"kappa = {self.kappa:.17g}",
                 f"levels = {' '.join(str(L) for L in self.levels)}"]
        if self.sizes is not None:
            lines.append(f"sizes = {' '.join(str(s) for s in self.sizes)}")
        lines.append(f"k = {self.k}")
        ref = "oracle" if self.reference == "oracle" else f"self {self.reference_size}"
        lines += [f"reference = {ref}", f"on_multiple = {self.on_multiple}",
                  f"tol = {self.tol:.17g}"]
        if self.out is not None:
            lines.append(f"out = {self.out}")
        return "\n".join(lines) + "\n"


def _parse_entry(key, tok):
    if key == "domain":
        return {"domain": tok[0], "domain_params": _floats(tok[1:], key)}
    if key == "interface":
        return {"interface": tok[0], "interface_params": _floats(tok[1:], key)}
    if key == "beta":
        return {"beta": _floats(tok, key, 2)}
    if key == "kappa":
        return {"kappa": _floats(tok, key, 1)[0]}
    if key == "levels":
        return {"levels": _ints(tok, key)}
    if key == "sizes":
        return {"sizes": _ints(tok, key)}
    if key == "k":
        return {"k": _ints(tok, key)[0]}
    if key == "reference":
        if tok[0] == "self":
            if len(tok) != 2:
                raise InvalidParameterError("reference = self needs a mesh size")
            return {"reference": "self", "reference_size": _ints(tok[1:], key)[0]}
        return {"reference": tok[0]}
    if key == "on_multiple":
        return {"on_multiple": tok[0]}
    if key == "tol":
        return {"tol": _floats(tok, key, 1)[0]}
    if key == "out":
        return {"out": " ".join(tok)}
    known = ", ".join(f.name for f in fields(StudyConfig))
    raise InvalidParameterError(f"unknown key {key!r} (known: {known})")


@dataclass
class LevelResult:
    level: int
    size: int
    h: float
    dof: int
    eigenvalues: np.ndarray
    residuals: np.ndarray


def solve_level(config, size, k=None):
    """Mesh, cut, assemble and solve one level; returns a :class:`LevelResult`."""
    k = config.k if k is None else k
    mesh = config.make_mesh(size)
    bases = build_bases(mesh, config.make_interface(), on_multiple=config.on_multiple)
    A, M, dofmap = assemble_system(bases, config.kappa)
    sol = solve_gevp(A, M, min(k, dofmap.n_dofs), tol=config.tol)
    return LevelResult(-1, size, mesh.h_max, dofmap.n_dofs, sol.eigenvalues, sol.residuals)


def _solve_level_task(args):
    config, level, size, k = args
    try:
        res = solve_level(config, size, k)
    except IFEMError as exc:
        raise type(exc)(f"level {level} (size {size}): {exc}") from exc
    res.level = level
    return res


def observed_orders(errors, h):
    """``log(e1/e2) / log(h1/h2)`` between consecutive rows of ``errors``."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(h, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(e[:-1] / e[1:]) / np.log(h[:-1, None] / h[1:, None]) if e.ndim == 2 \
            else np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


def fitted_slope(h, errors):
    """Least-squares slope of ``log(errors)`` against ``log(h)`` (per column)."""
    x = np.log(np.asarray(h, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    xc = x - x.mean()
    if y.ndim == 1:
        return float(xc @ (y - y.mean()) / (xc @ xc))
    return xc @ (y - y.mean(axis=0)) / (xc @ xc)


def clusters(values, rtol=CLUSTER_TOL):
    """Index groups of consecutive sorted values within ``rtol`` of each other."""
    values = np.asarray(values, dtype=float)
    groups = [[0]] if len(values) else []
    for i in range(1, len(values)):
        if abs(values[i] - values[i - 1]) <= rtol * abs(values[i]):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def pair_with_reference(computed, reference, k, rtol=CLUSTER_TOL):
    """Relative errors of the first ``k`` values paired by index.

    ``reference`` may hold more than ``k`` values; a reference cluster that
    straddles index ``k`` makes the last pairing ambiguous, which is returned
    as a note rather than resolved.
    """
    computed = np.sort(np.asarray(computed, dtype=float))[:k]
    reference = np.sort(np.asarray(reference, dtype=float))
    notes = []
    for g in clusters(reference, rtol):
        if g[0] < k <= g[-1]:
            notes.append(f"reference cluster {g[0] + 1}..{g[-1] + 1} "
                         f"({reference[g[0]]:.6g}) is cut by k={k}")
    ref = reference[:k]
    return np.abs(computed - ref) / np.abs(ref), notes


@dataclass
class ConvergenceReport:
    """Eigenvalues per level with relative errors and observed orders.

    ``orders[j]`` relates levels ``j`` and ``j+1``.
    """

    levels: list
    sizes: list
    h: np.ndarray
    dofs: np.ndarray
    eigenvalues: np.ndarray
    reference: np.ndarray
    errors: np.ndarray
    orders: np.ndarray
    notes: list = field(default_factory=list)

    @property
    def k(self):
        return self.eigenvalues.shape[1]

    def slopes(self, first=0):
        """Least-squares slope per eigenvalue over levels ``first..``."""
        return fitted_slope(self.h[first:], self.errors[first:])

    def to_csv(self):
        buf = io.StringIO()
        cols = ["level", "h", "dof"]
        for i in range(1, self.k + 1):
            cols += [f"lambda_{i}", f"err_{i}", f"ord_{i}"]
        buf.write(",".join(cols) + "\n")
        for j, L in enumerate(self.levels):
            row = [str(L), f"{self.h[j]:.12e}", str(int(self.dofs[j]))]
            for i in range(self.k):
                ordv = "" if j == 0 else f"{self.orders[j - 1, i]:.6f}"
                row += [f"{self.eigenvalues[j, i]:.12f}", f"{self.errors[j, i]:.12e}", ordv]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def table(self):
        """Fixed-width text table: reference column, then one column per level."""
        out = ["reference    " + "".join(f"{f'L{L} (ord)':>22}" for L in self.levels)]
        for i in range(self.k):
            cells = []
            for j in range(len(self.levels)):
                o = "" if j == 0 else f"({self.orders[j - 1, i]:.2f})"
                cells.append(f"{self.eigenvalues[j, i]:>14.6f} {o:>7}")
            out.append(f"{self.reference[i]:<12.6f} " + "".join(cells))
        out.append("dof          " + "".join(f"{int(d):>22d}" for d in self.dofs))
        out.append("slopes       " + " ".join(f"{s:.3f}" for s in self.slopes()))
        out.extend(f"note: {n}" for n in self.notes)
        return "\n".join(out)


def run_convergence(config, parallel=1):
    """Solve every level of ``config`` and compare with the reference.

    Levels are independent; with ``parallel > 1`` they run in worker
    processes. Results do not depend on the worker count.
    """
    sizes = config.level_sizes()
    levels = list(config.levels) if config.sizes is None else list(range(1, len(sizes) + 1))
    tasks = [(config, L, s, config.k) for L, s in zip(levels, sizes)]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_solve_level_task, tasks))
    else:
        results = [_solve_level_task(t) for t in tasks]
    k = min(config.k, *(len(r.eigenvalues) for r in results))
    if config.reference == "oracle":
        reference = circular_eigenvalues(config.circular_problem(), k + 2)
    else:
        ref = _solve_level_task((config, "reference", config.reference_size, k + 2))
        reference = ref.eigenvalues
    errors, notes = [], []
    for r in results:
        e, n = pair_with_reference(r.eigenvalues, reference, k)
        errors.append(e)
        notes.extend(n)
    errors = np.array(errors)
    h = np.array([r.h for r in results])
    return ConvergenceReport(
        levels=levels, sizes=list(sizes), h=h, dofs=np.array([r.dof for r in results]),
        eigenvalues=np.array([r.eigenvalues[:k] for r in results]), reference=reference[:k],
        errors=errors, orders=observed_orders(errors, h), notes=sorted(set(notes)))


def kappa_sweep(config, kappas, parallel=1):
    """One :class:`ConvergenceReport` per penalty factor."""
    return {float(kap): run_convergence(replace(config, kappa=float(kap)), parallel)
            for kap in kappas}


class RadialInterfaceSolution:
    """Manufactured solution ``u = r^3 / beta + c`` on a disk with a circular interface.

    ``c`` is chosen per side so that ``u`` is continuous at ``R_I`` and zero at
    ``R_O``. Since ``beta du/dr = 3 r^2`` on both sides the flux is continuous,
    and ``-div(beta grad u) = -9 r`` everywhere.
    """

    def __init__(self, R_I=0.38, R_O=1.0, beta_minus=1.0, beta_plus=1.0):
        self.R_I, self.R_O = R_I, R_O
        self.beta_minus, self.beta_plus = beta_minus, beta_plus
        self.c_plus = -R_O ** 3 / beta_plus
        self.c_minus = R_I ** 3 / beta_plus + self.c_plus - R_I ** 3 / beta_minus

    def _beta_c(self, r):
        inside = r < self.R_I
        return (np.where(inside, self.beta_minus, self.beta_plus),
                np.where(inside, self.c_minus, self.c_plus))

    def __call__(self, x, y):
        r = np.hypot(x, y)
        b, c = self._beta_c(r)
        return r ** 3 / b + c

    def gradient(self, x, y):
        r = np.hypot(x, y)
        b, _ = self._beta_c(r)
        return 3.0 * r * x / b, 3.0 * r * y / b

    def source(self, x, y):
        return -9.0 * np.hypot(x, y)


def source_errors(mesh, iface, solution, kappa=1.0, on_multiple="raise"):
    """Errors of the discrete source solution and of the interpolant.

    Returns ``(solve_errors, interp_errors)`` as :class:`~ifemeig.assembly.ErrorNorms`.
    """
    bases = build_bases(mesh, iface, on_multiple=on_multiple)
    A, _, dofmap = assemble_system(bases, kappa)
    b = dofmap.restrict(assemble_load(bases, solution.source))
    u_h = solve_source(A, b)
    solve_err = broken_norms(bases, u_h, solution, solution.gradient)
    interp_err = broken_norms(bases, interpolate(bases, solution), solution, solution.gradient)
    return solve_err, interp_err

