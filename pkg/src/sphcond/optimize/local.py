"""Heuristic inner solver: randomized greedy construction plus swap descent.

Construction is a greedy D-optimal design (maximize ``log det`` of the
regularized Gram matrix), which quickly yields a full-rank, well spread
selection. The descent then swaps one selected column for one unselected
column at a time. Candidate swaps are ranked by first-order eigenvalue
perturbation, ``lambda_k' ~ lambda_k - |u_k^H a|^2 + |u_k^H b|^2``, and only
the best few are re-evaluated exactly; small neighbourhoods are evaluated
exactly in full.

The result is locally optimal with respect to single swaps; global
optimality is not guaranteed.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..sh import RANK_FLOOR
from .types import HoopConstraintSet, InnerSolution, SelectionMask, SolverConfig

_BATCH_BYTES = 64 * 2**20
_N_EXTREME = 6


def _key(lmin, lmax, threshold):
    """Lexicographic score; smaller is better.

    Feasible masks rank by ``lambda_max`` (then larger ``lambda_min``);
    infeasible ones rank below every feasible mask, by their deficit.
    """
    if lmin >= threshold and lmin > RANK_FLOOR * lmax:
        return (0, lmax, -lmin)
    return (1, threshold - lmin, lmax)


def greedy_construct(A, q_prime, hoops=None, rng=None, pool=1):
    """Greedy D-optimal selection of ``q_prime`` columns.

    With ``pool > 1`` each step picks uniformly among the ``pool`` best
    columns, which randomizes restarts.
    """
    P, Q = A.shape
    norms = np.einsum("pi,pi->i", A.conj(), A).real
    delta = 1e-6 * max(norms.mean(), np.finfo(float).tiny)
    C = A / delta  # M @ A with M = (delta I + G)^-1
    chosen = np.zeros(Q, dtype=bool)
    counts = None if hoops is None else np.zeros(hoops.J, dtype=int)
    for _ in range(q_prime):
        gain = np.einsum("pi,pi->i", A.conj(), C).real
        allowed = ~chosen
        if hoops is not None:
            allowed &= counts[hoops.hoop_of] < hoops.caps[hoops.hoop_of]
        if not allowed.any():
            return None
        gain = np.where(allowed, gain, -np.inf)
        if pool > 1 and rng is not None:
            k = min(pool, int(allowed.sum()))
            top = np.argpartition(-gain, k - 1)[:k]
            j = int(rng.choice(np.sort(top)))
        else:
            j = int(np.argmax(gain))
        m = C[:, j].copy()
        denom = 1.0 + gain[j]
        C -= np.outer(m, m.conj() @ A) / denom
        chosen[j] = True
        if hoops is not None:
            counts[hoops.hoop_of[j]] += 1
    return chosen


def _batch_extremes(G, Aout, Ain):
    """Extreme eigenvalues of ``G - a a^H + b b^H`` for column pairs."""
    P = G.shape[0]
    per = max(1, _BATCH_BYTES // (16 * P * P))
    lo = np.empty(Aout.shape[1])
    hi = np.empty(Aout.shape[1])
    for s in range(0, Aout.shape[1], per):
        a = Aout[:, s:s + per]
        b = Ain[:, s:s + per]
        H = (G[None] - np.einsum("pi,qi->ipq", a, a.conj())
             + np.einsum("pi,qi->ipq", b, b.conj()))
        w = np.linalg.eigvalsh(H)
        lo[s:s + per] = w[:, 0]
        hi[s:s + per] = w[:, -1]
    return lo, hi


def descend(A, mask, threshold, hoops=None, cfg=SolverConfig()):
    """Swap descent from ``mask``; returns ``(mask, lambda_min, lambda_max)``."""
    P, Q = A.shape
    mask = mask.copy()
    B = A[:, mask]
    G = B @ B.conj().T
    w, U = np.linalg.eigh(G)
    key = _key(w[0], w[-1], threshold)
    counts = None if hoops is None else hoops.counts(mask)
    for _ in range(cfg.max_swaps):
        S = np.flatnonzero(mask)
        O = np.flatnonzero(~mask)
        if S.size == 0 or O.size == 0:
            break
        allowed = np.ones((S.size, O.size), dtype=bool)
        if hoops is not None:
            hs, ho = hoops.hoop_of[S], hoops.hoop_of[O]
            room = counts[ho] < hoops.caps[ho]
            allowed = room[None, :] | (hs[:, None] == ho[None, :])
        pairs_s, pairs_o = np.nonzero(allowed)
        if pairs_s.size == 0:
            break
        if pairs_s.size > cfg.exact_neighbourhood:
            # first-order screening on the extreme eigenpairs
            k = min(_N_EXTREME, P)
            Wt = np.abs(U[:, -k:].conj().T @ A) ** 2
            Wb = np.abs(U[:, :k].conj().T @ A) ** 2
            hi = (w[-k:, None] - Wt[:, S[pairs_s]] + Wt[:, O[pairs_o]]).max(axis=0)
            lo = (w[:k, None] - Wb[:, S[pairs_s]] + Wb[:, O[pairs_o]]).min(axis=0)
            if key[0] == 0:
                score = np.where(lo >= threshold, hi, np.inf)
                if not np.isfinite(score).any():
                    score = hi - lo
            else:
                score = -lo
            n = min(cfg.screen, score.size)
            pick = np.argpartition(score, n - 1)[:n]
            pairs_s, pairs_o = pairs_s[pick], pairs_o[pick]
        lo, hi = _batch_extremes(G, A[:, S[pairs_s]], A[:, O[pairs_o]])
        best, best_key = None, key
        for t in np.lexsort((pairs_o, pairs_s)):
            kk = _key(lo[t], hi[t], threshold)
            if kk < best_key:
                best, best_key = t, kk
        if best is None:
            break
        a, b = S[pairs_s[best]], O[pairs_o[best]]
        mask[a], mask[b] = False, True
        if hoops is not None:
            counts[hoops.hoop_of[a]] -= 1
            counts[hoops.hoop_of[b]] += 1
        G = G - np.outer(A[:, a], A[:, a].conj()) + np.outer(A[:, b], A[:, b].conj())
        w, U = np.linalg.eigh(G)
        key = _key(w[0], w[-1], threshold)
    B = A[:, mask]
    w = np.linalg.eigvalsh(B @ B.conj().T)
    return mask, float(w[0]), float(w[-1])


class LocalSearch:
    """Multi-lane local search reused across the thresholds of a sweep.

    Each lane keeps the mask it ended with, so consecutive solves at
    increasing thresholds warm-start from the previous answer. Lanes are
    seeded independently from ``cfg.seed`` and run in parallel threads; the
    combined answer does not depend on thread scheduling.
    """

    def __init__(self, A, q_prime, hoops: HoopConstraintSet | None = None,
                 cfg: SolverConfig = SolverConfig(), warm=None):
        self.A = np.asarray(A)
        self.q_prime = q_prime
        self.hoops = hoops
        self.cfg = cfg
        self.lanes = None
        self.warm = None if warm is None else np.asarray(warm, dtype=bool)

    def _init_lanes(self):
        seeds = np.random.SeedSequence(self.cfg.seed).spawn(self.cfg.restarts)
        lanes = []
        for r, ss in enumerate(seeds):
            if r == 0 and self.warm is not None:
                lanes.append(self.warm.copy())
                continue
            rng = np.random.default_rng(ss)
            m = greedy_construct(self.A, self.q_prime, self.hoops, rng, pool=1 if r == 0 else 3)
            if m is not None:
                lanes.append(m)
        self.lanes = lanes

    def __call__(self, threshold: float) -> InnerSolution | None:
        P, Q = self.A.shape
        if not 0 < self.q_prime <= Q:
            return None
        if self.lanes is None:
            self._init_lanes()
        if not self.lanes:
            return None

        def run(m):
            return descend(self.A, m, threshold, self.hoops, self.cfg)

        workers = min(self.cfg.workers, len(self.lanes))
        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                results = list(ex.map(run, self.lanes))
        else:
            results = [run(m) for m in self.lanes]
        self.lanes = [r[0] for r in results]
        keyed = [(_key(lmin, lmax, threshold), tuple(np.flatnonzero(m)), r)
                 for r, (m, lmin, lmax) in enumerate(results)]
        key, _, r = min(keyed)
        if key[0] != 0:
            return None
        m, lmin, lmax = results[r]
        return InnerSolution(SelectionMask(m), lmin, lmax)


def local_solve(A, q_prime, threshold, hoops=None, cfg=SolverConfig(), warm=None):
    """One-shot local search at a single threshold."""
    return LocalSearch(A, q_prime, hoops, cfg, warm)(threshold)
