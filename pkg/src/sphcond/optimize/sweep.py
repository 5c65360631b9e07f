"""Transition sweep over the lower bound on ``lambda_min``.

Minimizing the condition number directly is awkward; fixing a lower bound
``eta`` on ``lambda_min`` and minimizing ``lambda_max`` is not. The optimal
mask of that inner problem only changes at finitely many values of
``eta``, each equal to ``lambda_min`` of the previous optimum, so walking
those transitions from ``eta = 0`` and keeping the best ratio recovers the
minimum condition number.
"""
from __future__ import annotations

import logging
import math
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree
from scipy.cluster.hierarchy import DisjointSet

from ..errors import DomainError, InfeasibleError
from ..points import PointSet
from ..sh import AngleMode, Basis, ShMatrix, build_shm, kappa_from_eigs
from ..sampling import CIPIC_LATERAL_DEG, cipic_grid
from .exact import exact_solve
from .local import LocalSearch
from .types import (HoopConstraintSet, InnerSolution, SelectionMask, SolverConfig,
                    SolverMode, TransitionRecord, TransitionTrace)

log = logging.getLogger(__name__)

DUPLICATE_TOL = 1e-10


def _entries(A):
    return A.entries if isinstance(A, ShMatrix) else np.asarray(A)


def eta_upper_bound(shm) -> float:
    """``Tr(A A^H) / P``, an upper bound on ``lambda_min`` of every sub-Gram."""
    A = _entries(shm)
    return float(np.vdot(A, A).real) / A.shape[0]


def _working_matrix(shm):
    """Matrix with the same sub-Gram spectra, preferring a real basis.

    The real harmonics are a unitary recombination of the complex ones, so
    every ``A diag(mask) A^H`` keeps its eigenvalues; real arithmetic is
    several times cheaper.
    """
    if isinstance(shm, ShMatrix) and shm.basis is Basis.COMPLEX and shm.source is not None:
        return build_shm(shm.source, shm.order, Basis.REAL, shm.angle_mode).entries
    return _entries(shm)


def inner_solve(shm, q_prime: int, eta: float, hoops: HoopConstraintSet | None = None,
                cfg: SolverConfig = SolverConfig(), warm=None) -> InnerSolution | None:
    """Minimize ``lambda_max`` subject to ``lambda_min >= eta + epsilon``.

    Returns None when the constraints cannot be met (for the local search:
    when none was found).
    """
    A = _working_matrix(shm)
    if q_prime > A.shape[1]:
        raise DomainError(f"q_prime={q_prime} exceeds the {A.shape[1]} available columns")
    t = eta + cfg.epsilon
    if cfg.mode is SolverMode.EXACT_BNB:
        return exact_solve(A, q_prime, t, hoops, cfg)
    return LocalSearch(A, q_prime, hoops, cfg, warm)(t)


def run_sweep(solve: Callable[[float], InnerSolution | None], upper_bound: float = math.inf,
              condition: Callable[[float, float], float] = kappa_from_eigs,
              max_transitions: int | None = None) -> TransitionTrace:
    """Walk the transitions of an abstract inner solver.

    Parameters
    ----------
    solve : callable
        ``solve(eta)`` returns the optimum at lower bound ``eta`` (strictness
        handled by the solver) or None when infeasible.
    upper_bound : float
        Stop once ``eta`` reaches this value.
    condition : callable
        Maps ``(lambda_min, lambda_max)`` to the condition number.
    """
    records = []
    eta = 0.0
    termination = "bound"
    while eta < upper_bound:
        if max_transitions is not None and len(records) >= max_transitions:
            termination = "budget"
            break
        sol = solve(eta)
        if sol is None:
            termination = "infeasible"
            break
        if not sol.lambda_min > eta:
            raise DomainError(f"inner solver returned lambda_min={sol.lambda_min} <= eta={eta}")
        rec = TransitionRecord(len(records), eta, sol.mask, sol.lambda_min, sol.lambda_max,
                               condition(sol.lambda_min, sol.lambda_max))
        log.debug("transition %d: eta=%.6g lmin=%.6g lmax=%.6g kappa=%.6g",
                  rec.index, eta, rec.lambda_min, rec.lambda_max, rec.kappa)
        records.append(rec)
        eta = sol.lambda_min
    note = ""
    if not records and termination == "infeasible":
        note = "no selection is feasible at eta=0 (too few columns for full rank, or caps too tight)"
    return TransitionTrace(tuple(records), termination, upper_bound, note)


def sweep_transitions(shm, q_prime: int, hoops: HoopConstraintSet | None = None,
                      cfg: SolverConfig = SolverConfig(), inner=None) -> TransitionTrace:
    """Transition sweep on an SHM.

    ``inner(shm, q_prime, eta, hoops, cfg)`` defaults to :func:`inner_solve`;
    with the local search the solver state is carried across transitions so
    each solve warm-starts from the previous mask.
    """
    A = _working_matrix(shm)
    Q = A.shape[1]
    if not 0 <= q_prime <= Q:
        raise DomainError(f"q_prime={q_prime} outside 0..{Q}")
    if hoops is not None and hoops.Q != Q:
        raise DomainError("hoop membership does not match the number of columns")
    if hoops is not None and int(np.minimum(hoops.caps, np.bincount(hoops.hoop_of, minlength=hoops.J)).sum()) < q_prime:
        raise InfeasibleError(f"hoop caps admit fewer than {q_prime} columns")
    bound = eta_upper_bound(A)

    keep = np.arange(Q)
    if cfg.dedup:
        _, dmap = dedup_columns(A)
        keep = dmap.representatives
        A = A[:, keep]
        if hoops is not None:
            hoops = hoops.subset(keep)
        if q_prime > keep.size:
            return TransitionTrace((), "infeasible", bound,
                                   "fewer distinct columns than requested")

    if inner is not None:
        def solve(eta):
            return inner(A, q_prime, eta, hoops, cfg)
    elif cfg.mode is SolverMode.LOCAL_SEARCH:
        search = LocalSearch(A, q_prime, hoops, cfg)

        def solve(eta):
            return search(eta + cfg.epsilon)
    else:
        def solve(eta):
            return exact_solve(A, q_prime, eta + cfg.epsilon, hoops, cfg)

    trace = run_sweep(solve, bound, max_transitions=cfg.max_transitions)
    if keep.size == Q:
        return trace
    records = tuple(TransitionRecord(r.index, r.eta, SelectionMask.from_indices(keep[r.mask.indices()], Q),
                                     r.lambda_min, r.lambda_max, r.kappa) for r in trace.records)
    return TransitionTrace(records, trace.termination, trace.upper_bound, trace.note)


class DedupMap:
    """Column groups of a deduplicated matrix.

    ``group_of[q]`` is the reduced column holding original column ``q``;
    ``representatives[g]`` is the smallest original index of group ``g``.
    """

    def __init__(self, group_of: np.ndarray):
        self.group_of = np.asarray(group_of, dtype=int)
        n = int(self.group_of.max()) + 1 if self.group_of.size else 0
        reps = np.full(n, self.group_of.size, dtype=int)
        np.minimum.at(reps, self.group_of, np.arange(self.group_of.size))
        self.representatives = reps
        self.multiplicity = np.bincount(self.group_of, minlength=n)

    @property
    def n_removed(self) -> int:
        return int(self.group_of.size - self.representatives.size)

    @property
    def n_involved(self) -> int:
        """Original columns that share their group with at least one other."""
        return int(self.multiplicity[self.multiplicity > 1].sum())

    def is_identity(self) -> bool:
        return self.n_removed == 0

    def expand(self, reduced_mask) -> SelectionMask:
        """Original-column mask selecting each chosen group's representative."""
        bits = reduced_mask.bits if isinstance(reduced_mask, SelectionMask) else np.asarray(reduced_mask, bool)
        return SelectionMask.from_indices(self.representatives[bits], self.group_of.size)


def dedup_columns(shm, tol: float = DUPLICATE_TOL):
    """Merge columns equal within ``tol`` (max-abs difference).

    Returns
    -------
    reduced : ShMatrix or ndarray
        Matrix of group representatives, in the type of the input.
    mapping : DedupMap
    """
    A = _entries(shm)
    Q = A.shape[1]
    X = np.ascontiguousarray(A.T)
    if np.iscomplexobj(X):
        X = np.hstack([X.real, X.imag])
    uf = DisjointSet(range(Q))
    for i, j in cKDTree(X).query_pairs(tol, p=np.inf):
        uf.merge(i, j)
    roots = np.array([uf[q] for q in range(Q)])
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    # number groups in order of their first member so representatives ascend
    group_of = np.argsort(np.argsort(first))[inverse]
    mapping = DedupMap(group_of)
    reps = mapping.representatives
    if isinstance(shm, ShMatrix):
        return shm.columns(reps), mapping
    return A[:, reps], mapping


def cipic_caps_vector() -> np.ndarray:
    """Caps 14, 17, ..., 50, ..., 17, 14 for the 25 CIPIC hoops."""
    i = np.arange(1, 26)
    return np.where(i <= 13, 14 + 3 * (i - 1), 50 - 3 * (i - 13))


def make_cipic_caps(points: PointSet | None = None) -> HoopConstraintSet:
    """Hoop caps for the 1250-point CIPIC layout (hoop index = point label)."""
    pts = cipic_grid() if points is None else points
    if pts.labels is None:
        raise DomainError("points carry no hoop labels")
    return HoopConstraintSet(pts.labels, cipic_caps_vector(), tuple(CIPIC_LATERAL_DEG))


def optimize_hrtf_grid(points: PointSet, order: int, q_prime: int, caps: HoopConstraintSet,
                       cfg: SolverConfig = SolverConfig(mode=SolverMode.LOCAL_SEARCH),
                       basis=Basis.COMPLEX, angle_mode=AngleMode.GEOMETRIC) -> TransitionTrace:
    """Hoop-constrained selection of ``q_prime`` measurement directions."""
    if caps.Q != len(points):
        raise DomainError("caps membership does not match the point set")
    if points.labels is not None and not np.array_equal(points.labels, caps.hoop_of):
        raise DomainError("caps membership disagrees with the point labels")
    if int(caps.caps.sum()) < q_prime:
        raise InfeasibleError(f"caps sum to {int(caps.caps.sum())} < q_prime={q_prime}")
    shm = build_shm(points, order, basis, angle_mode)
    return sweep_transitions(shm, q_prime, caps, cfg)
