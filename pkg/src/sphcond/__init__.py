"""Spherical sampling design by condition-number minimization.

Build spherical harmonic matrices of sampling schemes, select subsets that
minimize their condition number, and evaluate the designs for Ambisonics
reproduction and HRTF interpolation.
"""
from .errors import (DegenerateGeometryError, DomainError, InfeasibleError, RankDeficientError,
                     SolverBudgetExceeded, SphcondError)
from .points import Convention, Direction, PointSet, from_interaural, to_interaural
from .sh import AngleMode, Basis, ShMatrix, build_shm, condition_number, eigen_summary, gram

__version__ = "0.1.0"

__all__ = [
    "AngleMode", "Basis", "Convention", "DegenerateGeometryError", "Direction", "DomainError",
    "InfeasibleError", "PointSet", "RankDeficientError", "ShMatrix", "SolverBudgetExceeded",
    "SphcondError", "build_shm", "condition_number", "eigen_summary", "from_interaural", "gram",
    "to_interaural",
]
