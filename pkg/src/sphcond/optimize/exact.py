"""Exact inner solver: depth-first branch and bound over column inclusion.

Both extreme eigenvalues of ``A diag(mask) A^H`` are monotone in the mask
(adding a column is a rank-one PSD update), which gives the two pruning
rules used here:

* the optimum of a subtree cannot have ``lambda_max`` below that of the
  columns already chosen, nor below ``trace / P`` of the cheapest completion;
* no completion can reach a larger ``lambda_min`` than chosen + all
  remaining columns together.
"""
from __future__ import annotations

import numpy as np

from ..errors import SolverBudgetExceeded
from ..sh import RANK_FLOOR
from .types import HoopConstraintSet, InnerSolution, SelectionMask, SolverConfig

#: relative tolerance under which two eigenvalues count as tied
TIE_RTOL = 1e-10


def better(cand, inc) -> bool:
    """Total order on ``(lambda_max, lambda_min, indices)`` solutions.

    Smaller ``lambda_max`` wins; near-ties go to the larger ``lambda_min``,
    then to the lexicographically smallest index tuple.
    """
    if inc is None:
        return True
    (cmax, cmin, cidx), (imax, imin, iidx) = cand, inc
    scale = max(abs(cmax), abs(imax), 1e-300)
    if cmax < imax - TIE_RTOL * scale:
        return True
    if cmax > imax + TIE_RTOL * scale:
        return False
    scale = max(abs(cmin), abs(imin), 1e-300)
    if cmin > imin + TIE_RTOL * scale:
        return True
    if cmin < imin - TIE_RTOL * scale:
        return False
    return tuple(cidx) < tuple(iidx)


def _extremes(G):
    w = np.linalg.eigvalsh(G)
    return float(w[0]), float(w[-1])


def exact_solve(A: np.ndarray, q_prime: int, threshold: float,
                hoops: HoopConstraintSet | None = None,
                cfg: SolverConfig = SolverConfig()) -> InnerSolution | None:
    """Minimize ``lambda_max`` over masks with ``lambda_min >= threshold``.

    Parameters
    ----------
    A : (P, Q) array
        Matrix whose columns are selected.
    q_prime : int
        Exact number of columns to keep.
    threshold : float
        Lower bound on ``lambda_min`` (the caller adds epsilon to eta).
    hoops : HoopConstraintSet, optional
        Per-hoop caps on the selection.

    Returns
    -------
    InnerSolution or None
        None when no mask satisfies the constraints.

    Raises
    ------
    SolverBudgetExceeded
        More than ``cfg.max_nodes`` nodes were expanded.
    """
    A = np.asarray(A)
    P, Q = A.shape
    if not 0 <= q_prime <= Q:
        return None
    outer = np.einsum("pi,qi->ipq", A, A.conj())
    suffix = np.zeros((Q + 1, P, P), dtype=outer.dtype)
    suffix[:Q] = np.cumsum(outer[::-1], axis=0)[::-1]
    norms = np.einsum("ipp->i", outer).real
    # cheapest[i][k]: sum of the k smallest column norms among columns i..Q-1
    cheapest = []
    for i in range(Q + 1):
        s = np.sort(norms[i:])
        cheapest.append(np.concatenate([[0.0], np.cumsum(s)]))

    if hoops is not None:
        hoop_of = hoops.hoop_of
        caps = hoops.caps
        remaining = np.zeros((Q + 1, hoops.J), dtype=int)
        for i in range(Q - 1, -1, -1):
            remaining[i] = remaining[i + 1]
            remaining[i, hoop_of[i]] += 1

    scale = float(norms.sum()) / max(P, 1)
    slack = 1e-12 * max(scale, 1.0)
    best = None
    nodes = 0

    def leaf(chosen):
        nonlocal best
        idx = np.asarray(chosen, dtype=int)
        B = A[:, idx]
        lmin, lmax = _extremes(B @ B.conj().T)
        if lmin < threshold or lmin <= RANK_FLOOR * lmax:
            return
        cand = (lmax, lmin, tuple(chosen))
        if better(cand, best):
            best = cand

    def dfs(i, G, chosen, counts):
        nonlocal nodes
        nodes += 1
        if nodes > cfg.max_nodes:
            raise SolverBudgetExceeded(f"branch and bound exceeded {cfg.max_nodes} nodes")
        need = q_prime - len(chosen)
        if need == 0:
            leaf(chosen)
            return
        if Q - i < need:
            return
        if hoops is not None:
            room = np.minimum(caps - counts, remaining[i]).sum()
            if room < need:
                return
        lmin_all, _ = _extremes(G + suffix[i])
        if lmin_all < threshold - slack:
            return
        if best is not None:
            _, lmax_now = _extremes(G) if chosen else (0.0, 0.0)
            lb = max(lmax_now, (np.trace(G).real + cheapest[i][need]) / P)
            if lb > best[0] * (1 + TIE_RTOL) + slack:
                return
        if hoops is None or counts[hoop_of[i]] < caps[hoop_of[i]]:
            chosen.append(i)
            if hoops is not None:
                counts[hoop_of[i]] += 1
            dfs(i + 1, G + outer[i], chosen, counts)
            chosen.pop()
            if hoops is not None:
                counts[hoop_of[i]] -= 1
        dfs(i + 1, G, chosen, counts)

    counts0 = np.zeros(hoops.J, dtype=int) if hoops is not None else None
    dfs(0, np.zeros((P, P), dtype=outer.dtype), [], counts0)
    if best is None:
        return None
    lmax, lmin, idx = best
    return InnerSolution(SelectionMask.from_indices(idx, Q), lmin, lmax)
