"""Exact eigenvalues of the concentric circular interface problem.

On the disk ``r <= R_O`` with interface ``r = R_I`` the eigenfunctions separate
as ``R(r) (d1 cos m theta + d2 sin m theta)``. The radial part is
``c1- J_m(k- r)`` inside and ``c1+ J_m(k+ r) + c2+ Y_m(k+ r)`` outside with
``k = sqrt(lambda / beta)``. The Dirichlet condition at ``R_O`` and the value
and flux continuity at ``R_I`` give a homogeneous 3x3 system whose determinant
vanishes exactly at the eigenvalues.

Bessel functions are computed here from scratch: ``J_n`` by Miller's backward
recurrence normalized with ``J_0 + 2 sum J_2k = 1``, ``Y_0`` and ``Y_1`` from
their Neumann series in ``J_n`` and higher ``Y_n`` by forward recurrence.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InvalidParameterError, RangeExhaustedError

EULER_GAMMA = 0.57721566490153286060651209
_BIG = 1e250


def _miller_start(nmax, xmax):
    n = max(nmax, xmax)
    start = int(n + 20 + np.sqrt(40.0 * n))
    return start + (start % 2)


def _bessel_j_table(nmax, x):
    """``J_n(x)`` for ``n = 0..nmax`` (rows) and ``x >= 0`` (flattened columns)."""
    x = np.asarray(x, dtype=float).ravel()
    out = np.zeros((nmax + 1, x.size))
    pos = x > 0
    out[0, ~pos] = 1.0
    if not np.any(pos):
        return out
    xp = x[pos]
    N = _miller_start(nmax, float(xp.max()))
    tab = np.zeros((max(nmax, N) + 2, xp.size))
    bjp = np.zeros_like(xp)
    bj = np.ones_like(xp)
    tab[N] = bj
    norm = np.zeros_like(xp)
    for k in range(N, 0, -1):
        bjm = (2.0 * k / xp) * bj - bjp
        bjp, bj = bj, bjm
        tab[k - 1] = bj
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * bj
        big = np.abs(bj) > _BIG
        if np.any(big):
            bj[big] /= _BIG
            bjp[big] /= _BIG
            norm[big] /= _BIG
            tab[k - 1:, big] /= _BIG
    norm += bj
    tab /= norm
    full = np.zeros((tab.shape[0], x.size))
    full[:, pos] = tab
    full[0, ~pos] = 1.0
    return full


def _bessel_table(nmax, x):
    """``(J, Y)`` tables of shape (nmax+1, size) for ``x > 0``."""
    x = np.asarray(x, dtype=float).ravel()
    if np.any(x <= 0):
        raise DomainError("Y_m requires x > 0")
    jt = _bessel_j_table(max(nmax, 1), x)
    nterms = (jt.shape[0] - 2) // 2
    k = np.arange(1, nterms + 1)[:, None]
    alt = np.where(k % 2 == 0, 1.0, -1.0)  # (-1)^k
    L = np.log(0.5 * x) + EULER_GAMMA
    y0 = (2.0 / np.pi) * (L * jt[0] - 2.0 * np.sum(alt * jt[2 * k[:, 0]] / k, axis=0))
    y1 = (2.0 / np.pi) * (-jt[0] / x + L * jt[1]
                          + np.sum(alt * (jt[2 * k[:, 0] - 1] - jt[2 * k[:, 0] + 1]) / k, axis=0))
    yt = np.empty((nmax + 1, x.size))
    yt[0] = y0
    if nmax >= 1:
        yt[1] = y1
    for n in range(1, nmax):
        yt[n + 1] = (2.0 * n / x) * yt[n] - yt[n - 1]
    return jt[:nmax + 1], yt


def _check_order(m):
    if int(m) != m or m < 0:
        raise InvalidParameterError(f"order must be a non-negative integer, got {m!r}")
    return int(m)


def bessel_j(m, x):
    """Bessel function of the first kind ``J_m(x)`` for ``x >= 0``."""
    m = _check_order(m)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("bessel_j is implemented for x >= 0")
    val = _bessel_j_table(m, xa)[m].reshape(xa.shape)
    return float(val) if val.ndim == 0 else val


def bessel_y(m, x):
    """Bessel function of the second kind ``Y_m(x)`` for ``x > 0``."""
    m = _check_order(m)
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("bessel_y is singular at x = 0 and undefined for x < 0")
    val = _bessel_table(m, xa)[1][m].reshape(xa.shape)
    return float(val) if val.ndim == 0 else val


def bessel_jy_derivatives(m, x):
    """``(J_m, Y_m, J_m', Y_m')`` at ``x > 0`` as flat arrays."""
    m = _check_order(m)
    jt, yt = _bessel_table(m + 1, x)
    if m == 0:
        return jt[0], yt[0], -jt[1], -yt[1]
    return jt[m], yt[m], 0.5 * (jt[m - 1] - jt[m + 1]), 0.5 * (yt[m - 1] - yt[m + 1])


@dataclass(frozen=True)
class CircularProblem:
    """Concentric disk problem: interface radius ``R_I`` inside outer radius ``R_O``."""

    R_I: float = 0.38
    R_O: float = 1.0
    beta_minus: float = 1.0
    beta_plus: float = 1.0
    m_max: int | None = None
    lambda_max: float | None = None

    def __post_init__(self):
        if not 0 < self.R_I < self.R_O:
            raise InvalidParameterError("need 0 < R_I < R_O")
        if not (self.beta_minus > 0 and self.beta_plus > 0):
            raise InvalidParameterError("beta_minus and beta_plus must be positive")
        if self.m_max is not None and (int(self.m_max) != self.m_max or self.m_max < 0):
            raise InvalidParameterError("m_max must be a non-negative integer")
        if self.lambda_max is not None and not self.lambda_max > 0:
            raise InvalidParameterError("lambda_max must be positive")


def _det_rows(lam, m, prob):
    lam = np.asarray(lam, dtype=float).ravel()
    kp = np.sqrt(lam / prob.beta_plus)
    km = np.sqrt(lam / prob.beta_minus)
    Jo, Yo, _, _ = bessel_jy_derivatives(m, kp * prob.R_O)
    Ji, Yi, dJi, dYi = bessel_jy_derivatives(m, kp * prob.R_I)
    Jm, _, dJm, _ = bessel_jy_derivatives(m, km * prob.R_I)
    zero = np.zeros_like(lam)
    rows = np.stack([
        np.stack([Jo, Yo, zero], axis=-1),
        np.stack([Ji, Yi, -Jm], axis=-1),
        np.stack([prob.beta_plus * kp * dJi, prob.beta_plus * kp * dYi,
                  -prob.beta_minus * km * dJm], axis=-1),
    ], axis=1)  # (n, 3, 3)
    rows /= np.max(np.abs(rows), axis=2, keepdims=True)
    return rows


def det_A(lam, m, prob):
    """Determinant of the row-normalized interface matrix at ``lam > 0``.

    Rows (outer boundary value, value continuity, flux continuity) are scaled
    to unit max-norm, which keeps the sign and the zeros of the determinant.
    """
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr <= 0):
        raise DomainError("det_A requires lambda > 0")
    d = np.linalg.det(_det_rows(lam_arr, m, prob)).reshape(lam_arr.shape)
    return float(d) if d.ndim == 0 else d


def _scan_step(prob):
    # highest oscillation rate of the entries as functions of sqrt(lambda)
    rate = (prob.R_O / np.sqrt(prob.beta_plus) + prob.R_I / np.sqrt(prob.beta_plus)
            + prob.R_I / np.sqrt(prob.beta_minus))
    return np.pi / rate / 50.0


def _bisect(f, lo, hi, flo, rtol=1e-13, maxiter=200):
    """Vectorized bisection of sign changes ``f(lo) * f(hi) < 0``."""
    lo, hi, flo = lo.copy(), hi.copy(), flo.copy()
    for _ in range(maxiter):
        if np.all(hi - lo <= rtol * hi):
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def _golden_min(f, a, b, iters=80):
    g = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def roots_for_order(m, prob, lambda_max, local_min_tol=1e-6):
    """Roots of ``det_A(., m)`` in ``(0, lambda_max]``, ascending."""
    beta_min = min(prob.beta_minus, prob.beta_plus)
    # no eigenvalue of angular order m lies below beta_min * m^2 / R_O^2
    s_lo = 0.5 * np.sqrt(beta_min) * max(2.404825557695773, m) / prob.R_O
    s_hi = np.sqrt(lambda_max)
    if s_lo >= s_hi:
        return np.array([])
    ds = _scan_step(prob)
    s = np.linspace(s_lo, s_hi, int(np.ceil((s_hi - s_lo) / ds)) + 1)
    d = det_A(s ** 2, m, prob)
    f = lambda ss: det_A(ss ** 2, m, prob)  # noqa: E731
    sign = np.sign(d)
    brackets = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    found = list(_bisect(f, s[brackets], s[brackets + 1], d[brackets])) if brackets.size else []
    exact = np.flatnonzero(d == 0)
    found += list(s[exact])
    # touching zeros without a sign change
    a = np.abs(d)
    mins = np.flatnonzero((a[1:-1] < a[:-2]) & (a[1:-1] < a[2:]) & (a[1:-1] < local_min_tol)) + 1
    for i in mins:
        if sign[i - 1] * sign[i + 1] < 0 or sign[i - 1] * sign[i] < 0 or sign[i] * sign[i + 1] < 0:
            continue
        sm, fm = _golden_min(lambda t: abs(f(np.array([t]))[0]), s[i - 1], s[i + 1])
        if fm < 1e-12:
            found.append(sm)
    return np.sort(np.asarray(found) ** 2)


def circular_modes(prob, count):
    """The ``count`` smallest eigenvalues with their angular order.

    Returns a list of ``(lambda, m)`` pairs; orders ``m >= 1`` appear twice
    (cosine and sine modes).
    """
    if int(count) != count or count < 1:
        raise InvalidParameterError("count must be a positive integer")
    count = int(count)
    beta_min = min(prob.beta_minus, prob.beta_plus)
    beta_max = max(prob.beta_minus, prob.beta_plus)
    if prob.lambda_max is not None:
        lam_max = float(prob.lambda_max)
    else:
        # twice the equal-beta estimate; doubled until enough roots appear
        lam_max = 2.0 * beta_min * _equal_beta_estimate(count) / prob.R_O ** 2
    ceiling = 4.0 * beta_max * _equal_beta_estimate(count) / prob.R_O ** 2
    while True:
        if prob.m_max is not None:
            m_top = int(prob.m_max)
        else:
            m_top = int(np.floor(prob.R_O * np.sqrt(lam_max / beta_min)))
        modes = []
        for m in range(m_top + 1):
            for lam in roots_for_order(m, prob, lam_max):
                modes.extend([(float(lam), m)] * (1 if m == 0 else 2))
        modes.sort()
        if len(modes) >= count:
            if prob.m_max is not None:
                needed = int(np.floor(prob.R_O * np.sqrt(modes[count - 1][0] / beta_min)))
                if needed > prob.m_max:
                    warnings.warn(f"m_max={prob.m_max} may omit eigenvalues of order up to "
                                  f"{needed}", RuntimeWarning, stacklevel=2)
            return modes[:count]
        if prob.lambda_max is not None or lam_max > ceiling:
            raise RangeExhaustedError(
                f"found {len(modes)} of {count} eigenvalues below lambda_max={lam_max:g} "
                f"with m <= {m_top}; increase lambda_max or m_max")
        lam_max *= 2.0


def circular_eigenvalues(prob, count):
    """The ``count`` smallest exact eigenvalues, repeated by multiplicity."""
    return np.array([lam for lam, _ in circular_modes(prob, count)])


def _equal_beta_estimate(count):
    """Approximate ``count``-th Dirichlet eigenvalue of the unit disk (Weyl)."""
    # Weyl: N(lambda) ~ lambda * area / (4 pi) = lambda / 4 for the unit disk
    return max(4.0 * count, 2.404825557695773 ** 2) + 8.0 * np.sqrt(count)


def radial_mode(prob, lam, m):
    """Radial profile ``R(r)`` of the eigenfunction at eigenvalue ``lam``.

    Returns a vectorized callable normalized so that ``max |R|`` on a fine
    grid is one.
    """
    A = _det_rows(np.array([lam]), m, prob)[0]
    _, _, vt = np.linalg.svd(A)
    c1p, c2p, c1m = vt[-1]
    kp = np.sqrt(lam / prob.beta_plus)
    km = np.sqrt(lam / prob.beta_minus)
    # undo the row scaling: the null vector is unaffected by it

    def R(r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inner = r < prob.R_I
        out[inner] = c1m * bessel_j(m, km * r[inner]) if np.any(inner) else out[inner]
        ro = np.maximum(r[~inner], 1e-300)
        if np.any(~inner):
            out[~inner] = c1p * bessel_j(m, kp * ro) + c2p * bessel_y(m, kp * ro)
        return out

    grid = np.linspace(1e-6, prob.R_O, 2001)
    scale = np.max(np.abs(R(grid)))
    return lambda r: R(r) / scale
