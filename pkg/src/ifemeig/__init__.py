"""Immersed Crouzeix-Raviart finite elements for elliptic interface eigenproblems."""

from .assembly import (DofMap, ErrorNorms, assemble_load, assemble_mass, assemble_penalty,
                       assemble_stiffness, assemble_system, broken_norms)
from .basis import (ImmersedBasis, LocalBasisSet, build_bases, immersed_basis, interpolate,
                    standard_cr_basis)
from .eigsolve import EigenSolution, solve_gevp, solve_source
from .estimator import IFEMEigensolver, IFEMSourceSolver
from .exceptions import (ConvergenceError, DefinitenessError, DomainError, IFEMError,
                         InvalidMeshError, InvalidParameterError, MeshParseError,
                         MeshTooCoarseError, RangeExhaustedError, SingularBasisError)
from .export import export_field, write_csv, write_vtk
from .geometry import (ElementDecomposition, LevelSetInterface, classify_element, cut_mesh,
                       decompose, edge_intersection)
from .mesh import Mesh, gen_disk_mesh, gen_square_mesh, load_mesh, save_mesh
from .oracle import (CircularProblem, bessel_j, bessel_y, circular_eigenvalues, circular_modes,
                     det_A)
from .study import ConvergenceReport, StudyConfig, run_convergence

__version__ = "0.1.0"
