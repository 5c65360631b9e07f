import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sphcond.errors import DomainError, InfeasibleError, SolverBudgetExceeded
from sphcond.optimize import (HoopConstraintSet, InnerSolution, SelectionMask, SolverConfig, SolverMode,
                              dedup_columns, eta_upper_bound, exact_solve, greedy_construct, inner_solve,
                              local_solve, make_cipic_caps, optimize_hrtf_grid, run_sweep, sweep_transitions)
from sphcond.optimize.local import descend
from sphcond.points import PointSet
from sphcond.sampling import cipic_grid, gen_fibonacci
from sphcond.sh import AngleMode, build_shm, kappa_from_eigs, sh_matrix

EPS = 1e-7


def random_shm(rng, Q, N=1):
    col = np.arccos(rng.uniform(-1, 1, Q))
    az = rng.uniform(0, 2 * np.pi, Q)
    return sh_matrix(N, col, az)


def extremes(A, idx):
    B = A[:, list(idx)]
    w = np.linalg.eigvalsh(B @ B.conj().T)
    return w[0], w[-1]


def brute_inner(A, q_prime, t, caps=None, hoop_of=None):
    """Enumerate every subset; same objective and tie-break as the solver."""
    best = None
    for idx in itertools.combinations(range(A.shape[1]), q_prime):
        if caps is not None and np.any(np.bincount(hoop_of[list(idx)], minlength=len(caps)) > caps):
            continue
        lmin, lmax = extremes(A, idx)
        if lmin < t or lmin <= 1e-12 * lmax:
            continue
        key = (round(lmax, 9), -round(lmin, 9), idx)
        if best is None or key < best[0]:
            best = (key, lmin, lmax, idx)
    return best


def brute_kappa(A, q_prime, caps=None, hoop_of=None):
    best = math.inf
    for idx in itertools.combinations(range(A.shape[1]), q_prime):
        if caps is not None and np.any(np.bincount(hoop_of[list(idx)], minlength=len(caps)) > caps):
            continue
        best = min(best, kappa_from_eigs(*extremes(A, idx)))
    return best


# ------------------------------------------------------------------ bound
def test_bound_identity_and_trace(rng):
    assert eta_upper_bound(np.eye(5)) == pytest.approx(1.0)
    A = rng.standard_normal((3, 10))
    assert eta_upper_bound(A) == pytest.approx(np.trace(A @ A.T) / 3)


def test_bound_of_shm_is_q_over_4pi(rng):
    for N in (1, 3, 5):
        A = random_shm(rng, 40, N)
        assert eta_upper_bound(A) == pytest.approx(40 / (4 * math.pi))


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(4, 30))
def test_bound_dominates_lambda_min_of_every_mask(seed, N, Q):
    rng = np.random.default_rng(seed)
    A = random_shm(rng, Q, N)
    mask = rng.random(Q) < rng.uniform(0.2, 1.0)
    if mask.any():
        assert extremes(A, np.flatnonzero(mask))[0] <= eta_upper_bound(A) * (1 + 1e-12)


@given(st.integers(0, 2**32 - 1))
def test_adding_a_column_never_lowers_extreme_eigenvalues(seed):
    rng = np.random.default_rng(seed)
    A = random_shm(rng, 14, 1)
    idx = list(rng.choice(14, 6, replace=False))
    extra = [q for q in range(14) if q not in idx][0]
    lo0, hi0 = extremes(A, idx)
    lo1, hi1 = extremes(A, idx + [extra])
    assert lo1 >= lo0 - 1e-12 and hi1 >= hi0 - 1e-12


# ------------------------------------------------------------------ masks and hoops
def test_selection_mask_algebra():
    m = SelectionMask.from_indices([1, 3], 5)
    assert m.q_prime == 2 and m.q == 5
    G = m.selection_matrix()
    assert np.array_equal(G @ G.T, np.diag(m.bits.astype(float)))
    assert np.all(G.sum(axis=0) == 1) and np.all(G.sum(axis=1) <= 1)
    assert m == SelectionMask([0, 1, 0, 1, 0]) and hash(m) == hash(SelectionMask([0, 1, 0, 1, 0]))
    with pytest.raises(DomainError):
        SelectionMask.from_indices([7], 5)


def test_hoop_membership_matrix():
    h = HoopConstraintSet([0, 1, 1, 2], [1, 1, 1])
    U = h.membership
    assert U.shape == (3, 4) and np.all(U.sum(axis=0) == 1)
    assert h.satisfied([1, 1, 0, 1]) and not h.satisfied([0, 1, 1, 0])
    assert HoopConstraintSet.from_membership(U, [1, 1, 1]).hoop_of.tolist() == [0, 1, 1, 2]
    with pytest.raises(DomainError):
        HoopConstraintSet.from_membership([[1, 1], [1, 0]], [1, 1])
    with pytest.raises(DomainError):
        HoopConstraintSet([0, 5], [1, 1])


def test_cipic_caps():
    caps = make_cipic_caps()
    v = caps.caps
    assert caps.J == 25 and caps.Q == 1250
    assert v[0] == 14 and v[12] == 50 and v[24] == 14
    assert list(v[:13]) == [14 + 3 * i for i in range(13)]
    assert list(v[13:]) == [50 - 3 * (i - 13) for i in range(14, 26)]
    assert np.array_equal(caps.hoop_of, cipic_grid().labels)


def test_solver_config_validation():
    with pytest.raises(DomainError):
        SolverConfig(epsilon=0)
    assert SolverConfig(mode="local").mode is SolverMode.LOCAL_SEARCH


# ------------------------------------------------------------------ exact inner solver
@pytest.mark.parametrize("seed", range(6))
def test_exact_matches_enumeration_q10(seed):
    A = random_shm(np.random.default_rng(seed), 10)
    sol = exact_solve(A, 6, EPS)
    ref = brute_inner(A, 6, EPS)
    assert tuple(sol.mask.indices()) == ref[3]
    assert sol.lambda_max == pytest.approx(ref[2], rel=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_exact_matches_enumeration_with_threshold(seed):
    rng = np.random.default_rng(100 + seed)
    A = random_shm(rng, 11)
    t = eta_upper_bound(A) * rng.uniform(0.05, 0.4)
    sol = exact_solve(A, 7, t)
    ref = brute_inner(A, 7, t)
    if ref is None:
        assert sol is None
    else:
        assert tuple(sol.mask.indices()) == ref[3]


def test_exact_full_selection(rng):
    A = random_shm(rng, 9)
    sol = exact_solve(A, 9, EPS)
    assert sol.mask.q_prime == 9
    assert sol.lambda_max == pytest.approx(np.linalg.eigvalsh(A @ A.conj().T)[-1])


def test_exact_infeasible_below_rank(rng):
    assert exact_solve(random_shm(rng, 10, 2), 5, EPS) is None


def test_exact_budget(rng):
    with pytest.raises(SolverBudgetExceeded):
        exact_solve(random_shm(rng, 12), 6, EPS, cfg=SolverConfig(max_nodes=5))


def test_exact_with_hoops_matches_enumeration(rng):
    A = random_shm(rng, 12)
    hoop_of = np.repeat(np.arange(4), 3)
    caps = np.array([1, 2, 3, 1])
    hoops = HoopConstraintSet(hoop_of, caps)
    sol = exact_solve(A, 6, EPS, hoops)
    ref = brute_inner(A, 6, EPS, caps, hoop_of)
    assert tuple(sol.mask.indices()) == ref[3]
    assert hoops.satisfied(sol.mask)


def test_feasible_region_nesting(rng):
    A = random_shm(rng, 9)
    lmins = {idx: extremes(A, idx)[0] for idx in itertools.combinations(range(9), 5)}
    etas = np.sort(rng.uniform(0, eta_upper_bound(A), 6))
    sets = [{idx for idx, v in lmins.items() if v >= e + EPS} for e in etas]
    for lo, hi in zip(sets, sets[1:]):
        assert hi <= lo


# ------------------------------------------------------------------ sweep
def test_sweep_records_are_transitions(rng):
    A = random_shm(rng, 12)
    trace = sweep_transitions(A, 8)
    recs = trace.records
    assert recs[0].eta == 0.0
    for a, b in zip(recs, recs[1:]):
        assert b.eta == a.lambda_min
        assert b.eta > a.eta
    for r in recs:
        assert r.lambda_min > r.eta
        assert r.kappa == pytest.approx(math.sqrt(r.lambda_max / r.lambda_min))
    assert trace.kappa_star == min(r.kappa for r in recs)
    assert trace.eta_star == trace.best.eta
    assert trace.termination in ("bound", "infeasible")


@pytest.mark.parametrize("seed", range(5))
def test_sweep_soundness_inside_intervals(seed):
    rng = np.random.default_rng(200 + seed)
    A = random_shm(rng, 10)
    trace = sweep_transitions(A, 6)
    for r in trace.records:
        if r.lambda_min - r.eta > 4 * EPS:
            eta_hat = rng.uniform(r.eta, r.lambda_min - 2 * EPS)
            sol = exact_solve(A, 6, eta_hat + EPS)
            assert kappa_from_eigs(sol.lambda_min, sol.lambda_max) == pytest.approx(r.kappa, rel=1e-9)


@pytest.mark.parametrize("seed", range(8))
def test_sweep_optimum_equals_enumeration(seed):
    rng = np.random.default_rng(300 + seed)
    Q = int(rng.integers(8, 13))
    qp = int(rng.choice([6, 8]))
    A = random_shm(rng, Q)
    assert sweep_transitions(A, qp).kappa_star == pytest.approx(brute_kappa(A, qp), rel=1e-9)


def test_sweep_with_caps_at_full_hoop_size_is_unconstrained(rng):
    A = random_shm(rng, 12)
    hoops = HoopConstraintSet(np.repeat(np.arange(3), 4), [4, 4, 4])
    assert sweep_transitions(A, 7, hoops).kappa_star == pytest.approx(sweep_transitions(A, 7).kappa_star)


def test_sweep_with_caps_matches_enumeration(rng):
    A = random_shm(rng, 12)
    hoop_of = np.repeat(np.arange(3), 4)
    caps = np.array([1, 3, 4])
    trace = sweep_transitions(A, 7, HoopConstraintSet(hoop_of, caps))
    assert trace.kappa_star == pytest.approx(brute_kappa(A, 7, caps, hoop_of), rel=1e-9)
    assert all(np.all(np.bincount(hoop_of[r.mask.bits], minlength=3) <= caps) for r in trace.records)


def test_caps_summing_to_q_prime_fill_every_hoop(rng):
    A = random_shm(rng, 12)
    hoops = HoopConstraintSet(np.repeat(np.arange(3), 4), [1, 2, 3])
    trace = sweep_transitions(A, 6, hoops)
    assert trace.feasible
    for r in trace.records:
        assert hoops.counts(r.mask).tolist() == [1, 2, 3]


def test_caps_too_tight(rng):
    A = random_shm(rng, 12)
    with pytest.raises(InfeasibleError):
        sweep_transitions(A, 8, HoopConstraintSet(np.repeat(np.arange(3), 4), [1, 2, 3]))


def test_full_selection_sweep(rng):
    A = random_shm(rng, 9)
    trace = sweep_transitions(A, 9)
    assert trace.R == 1
    w = np.linalg.eigvalsh(A @ A.conj().T)
    assert trace.kappa_star == pytest.approx(math.sqrt(w[-1] / w[0]))


def test_first_solve_infeasible_gives_empty_trace(rng):
    trace = sweep_transitions(random_shm(rng, 12, 2), 6)
    assert trace.R == 0 and trace.best_mask is None and math.isinf(trace.kappa_star)
    assert trace.termination == "infeasible" and trace.note


def test_run_sweep_rejects_non_increasing_solver():
    def bad(eta):
        return InnerSolution(SelectionMask([1]), eta, 1.0)

    with pytest.raises(DomainError):
        run_sweep(bad)


def test_run_sweep_budget():
    def solver(eta):
        return InnerSolution(SelectionMask([1]), eta + 1, eta + 2)

    trace = run_sweep(solver, upper_bound=100, max_transitions=3)
    assert trace.R == 3 and trace.termination == "budget"


def test_run_sweep_stops_at_bound():
    def solver(eta):
        return InnerSolution(SelectionMask([1]), eta + 1, 10.0)

    trace = run_sweep(solver, upper_bound=3.5)
    assert [r.eta for r in trace.records] == [0, 1, 2, 3]
    assert trace.termination == "bound"


def test_injected_inner_solver(rng):
    A = random_shm(rng, 10)
    calls = []

    def inner(A_, qp, eta, hoops, cfg):
        calls.append(eta)
        return exact_solve(A_, qp, eta + cfg.epsilon, hoops, cfg)

    trace = sweep_transitions(A, 6, inner=inner)
    assert calls[:trace.R] == [r.eta for r in trace.records]


def test_inner_solve_dispatch(rng):
    pts = PointSet(np.arccos(rng.uniform(-1, 1, 10)), rng.uniform(0, 2 * np.pi, 10))
    shm = build_shm(pts, 1)
    exact = inner_solve(shm, 6, 0.0)
    local = inner_solve(shm, 6, 0.0, cfg=SolverConfig(mode="local", restarts=3))
    assert local.lambda_max >= exact.lambda_max - 1e-12
    with pytest.raises(DomainError):
        inner_solve(shm, 11, 0.0)


# ------------------------------------------------------------------ local search
def test_greedy_respects_caps_and_count(rng):
    A = random_shm(rng, 40, 2)
    hoops = HoopConstraintSet(np.arange(40) % 5, [3, 3, 3, 3, 3])
    m = greedy_construct(A, 15, hoops)
    assert m.sum() == 15 and hoops.satisfied(m)
    assert greedy_construct(A, 16, hoops) is None


def test_greedy_reaches_full_rank(rng):
    A = random_shm(rng, 40, 3)
    m = greedy_construct(A, 16)
    assert extremes(A, np.flatnonzero(m))[0] > 1e-8


def test_descent_never_worsens_objective(rng):
    A = random_shm(rng, 40, 2)
    start = greedy_construct(A, 14)
    lmin0, lmax0 = extremes(A, np.flatnonzero(start))
    m, lmin, lmax = descend(A, start, EPS)
    assert m.sum() == 14
    assert lmax <= lmax0 + 1e-12


def test_local_search_is_deterministic_and_feasible(rng):
    A = random_shm(rng, 60, 2)
    hoops = HoopConstraintSet(np.arange(60) % 6, [4] * 6)
    cfg = SolverConfig(mode="local", restarts=3, seed=7)
    a = local_solve(A, 20, 0.05, hoops, cfg)
    b = local_solve(A, 20, 0.05, hoops, SolverConfig(mode="local", restarts=3, seed=7, threads=3))
    assert a.mask == b.mask
    assert a.mask.q_prime == 20 and hoops.satisfied(a.mask) and a.lambda_min >= 0.05


def test_local_close_to_exact_on_small_instances():
    ratios = []
    for seed in range(10):
        A = random_shm(np.random.default_rng(seed), 12)
        ex = sweep_transitions(A, 6).kappa_star
        lo = sweep_transitions(A, 6, cfg=SolverConfig(mode="local", restarts=4, seed=seed)).kappa_star
        assert lo >= ex * (1 - 1e-9)
        ratios.append(lo / ex)
    assert np.median(ratios) < 1.05


def test_local_sweep_screened_neighbourhood(rng):
    A = random_shm(rng, 120, 3)
    cfg = SolverConfig(mode="local", restarts=2, exact_neighbourhood=50, screen=8, max_transitions=20)
    trace = sweep_transitions(A, 40, cfg=cfg)
    assert trace.R > 0 and all(r.mask.q_prime == 40 for r in trace.records)
    assert math.isfinite(trace.kappa_star)
    assert all(b.eta > a.eta for a, b in zip(trace.records, trace.records[1:]))


# ------------------------------------------------------------------ dedup
def test_dedup_identity_without_duplicates():
    reduced, dmap = dedup_columns(build_shm(cipic_grid(), 5))
    assert dmap.is_identity() and reduced.Q == 1250


def test_dedup_appended_duplicate(rng):
    pts = PointSet(np.arccos(rng.uniform(-1, 1, 20)), rng.uniform(0, 2 * np.pi, 20))
    dup = pts.concat(pts.subset([4]))
    shm = build_shm(pts, 2)
    reduced, dmap = dedup_columns(build_shm(dup, 2))
    assert reduced.Q == 20 and dmap.n_removed == 1 and dmap.n_involved == 2
    assert dmap.group_of[20] == dmap.group_of[4]
    assert reduced.kappa == pytest.approx(shm.kappa)
    assert dmap.expand(np.ones(20, bool)).q_prime == 20


def test_dedup_mirror_pairs_in_literal_mode():
    # under literal angles an elevation and its negative give identical columns
    el = np.array([0.2, 0.5, 0.9])
    pts = PointSet(np.concatenate([el, -el, [1.2]]), np.r_[0.3, 1.0, 2.0, 0.3, 1.0, 2.0, 4.0],
                   convention="above_xy")
    _, dmap = dedup_columns(build_shm(pts, 3, angle_mode=AngleMode.LITERAL))
    assert dmap.n_removed == 3
    _, geo = dedup_columns(build_shm(pts, 3))
    assert geo.is_identity()


def test_sweep_with_dedup_never_selects_both_copies(rng):
    pts = PointSet(np.arccos(rng.uniform(-1, 1, 10)), rng.uniform(0, 2 * np.pi, 10))
    dup = pts.concat(pts.subset([0, 1]))
    trace = sweep_transitions(build_shm(dup, 1), 6, cfg=SolverConfig(dedup=True))
    for r in trace.records:
        assert r.mask.q == 12 and not r.mask.bits[10:].any()


# ------------------------------------------------------------------ hrtf grid entry point
def test_optimize_hrtf_grid_small():
    pts = cipic_grid().subset(np.flatnonzero(np.isin(cipic_grid().labels, [0, 12, 24])
                                             & (np.arange(1250) % 50 % 5 == 0)))
    labels = np.searchsorted([0, 12, 24], pts.labels)
    pts = PointSet(pts.theta, pts.phi, pts.convention, labels)
    caps = HoopConstraintSet(labels, [4, 8, 4])
    trace = optimize_hrtf_grid(pts, 2, 14, caps, SolverConfig(mode="local", restarts=2))
    assert caps.satisfied(trace.best_mask) and trace.best_mask.q_prime == 14
    with pytest.raises(InfeasibleError):
        optimize_hrtf_grid(pts, 2, 17, caps)
    with pytest.raises(DomainError):
        optimize_hrtf_grid(pts, 2, 10, HoopConstraintSet(np.zeros(len(pts), int), [40]))


def test_literal_fibonacci_selection_improves_kappa():
    shm = build_shm(gen_fibonacci(40), 2, angle_mode=AngleMode.LITERAL)
    trace = sweep_transitions(shm, 14, cfg=SolverConfig(mode="local", restarts=2))
    assert trace.kappa_star < shm.kappa
