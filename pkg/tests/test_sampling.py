import itertools
import math

import numpy as np
import pytest
from scipy.special import gamma

from sphcond.errors import DomainError
from sphcond.points import Convention, to_interaural
from sphcond.sampling import (CIPIC_LATERAL_DEG, MCC_SPACING_DEG, cipic_grid, gen_ecc, gen_equiangular,
                              gen_fibonacci, gen_gaussian, gen_interaural_grid, gen_mcc, load_tdesign,
                              mcc_elevations_deg, tdesign_names, tdesign_order, tdesign_strength)
from sphcond.sh import build_shm, n_coeffs, sh_matrix


def sphere_monomial_mean(a, b, c):
    """Exact mean of x^a y^b z^c over the unit sphere."""
    if a % 2 or b % 2 or c % 2:
        return 0.0
    num = 2 * gamma((a + 1) / 2) * gamma((b + 1) / 2) * gamma((c + 1) / 2)
    return num / gamma((a + b + c + 3) / 2) / (4 * math.pi)


def test_fibonacci_formula():
    Q = 7
    p = gen_fibonacci(Q)
    c1 = (math.sqrt(5) - 1) / 2
    for k, i in enumerate(range(1, Q + 1)):
        assert p.theta[k] == pytest.approx(math.asin(2 * i / Q - 1))
        assert p.phi[k] == pytest.approx((2 * math.pi * c1 * i) % (2 * math.pi))
    assert p.convention is Convention.ABOVE_XY
    assert len(gen_fibonacci(100)) == 100
    with pytest.raises(DomainError):
        gen_fibonacci(0)


@pytest.mark.parametrize("N", [0, 1, 3, 6])
def test_gaussian_quadrature_is_exact(N):
    pts, w = gen_gaussian(N, return_weights=True)
    assert len(pts) == 2 * (N + 1) ** 2
    assert w.sum() == pytest.approx(4 * math.pi)
    Y = build_shm(pts, N).entries
    np.testing.assert_allclose((Y * w) @ Y.conj().T, np.eye(n_coeffs(N)), atol=1e-12)


def test_equiangular_avoids_poles():
    p = gen_equiangular(2)
    assert len(p) == 36
    assert p.theta.min() > 0 and p.theta.max() < math.pi


@pytest.mark.parametrize("name", tdesign_names())
def test_tdesign_integrates_monomials(name):
    T = tdesign_strength(name)
    xyz = load_tdesign(name).xyz()
    for a, b, c in itertools.product(range(T + 1), repeat=3):
        if a + b + c <= T:
            got = np.mean(xyz[:, 0] ** a * xyz[:, 1] ** b * xyz[:, 2] ** c)
            assert got == pytest.approx(sphere_monomial_mean(a, b, c), abs=1e-12)


@pytest.mark.parametrize("name", tdesign_names())
def test_tdesign_unit_norm_and_order(name):
    p = load_tdesign(name)
    np.testing.assert_allclose(np.linalg.norm(p.xyz(), axis=1), 1.0)
    assert len(p) == int(name.split("Q")[1])
    assert tdesign_order(name) == tdesign_strength(name) // 2


def test_unknown_tdesign():
    with pytest.raises(DomainError):
        load_tdesign("T99Q1")


def _lat_el(p):
    lat, pol = to_interaural(p)
    return np.round(np.rad2deg(lat), 6), np.round(np.rad2deg(pol), 6)


def test_cipic_layout():
    p = cipic_grid()
    assert len(p) == 1250
    lat, el = _lat_el(p)
    assert sorted(set(lat)) == sorted(CIPIC_LATERAL_DEG)
    np.testing.assert_allclose(sorted(set(el)), -45 + 5.625 * np.arange(50), atol=1e-6)
    assert np.all(np.bincount(p.labels) == 50)


def test_ecc_layout():
    p = gen_ecc()
    lat, el = _lat_el(p)
    assert len(p) == 625
    np.testing.assert_allclose(sorted(set(el)), -45 + 11.25 * np.arange(25), atol=1e-6)
    assert np.all(np.bincount(p.labels) == 25)


def test_mcc_layout():
    p = gen_mcc()
    assert len(p) == 625
    per_hoop = np.bincount(p.labels)
    assert np.array_equal(per_hoop, per_hoop[::-1])
    for lat_deg, elevs in zip(CIPIC_LATERAL_DEG, mcc_elevations_deg()):
        step = MCC_SPACING_DEG[abs(lat_deg)]
        front = [e for e in elevs if -45 <= e <= 45]
        back = [e for e in elevs if 135 <= e <= 230.625 + 1e-9]
        assert np.allclose(np.diff(front), step) and np.allclose(np.diff(back), step)
        assert front[0] == -45 and back[0] == 135
    # hoops near the interaural axis are sparser than the median plane in the side bands
    assert len(mcc_elevations_deg()[0]) < len(mcc_elevations_deg()[12])


def test_interaural_grid_validation():
    with pytest.raises(DomainError):
        gen_interaural_grid([], 0.1)
    with pytest.raises(DomainError):
        gen_interaural_grid([0.0], 0.0)
    p = gen_interaural_grid([0.0, 0.5], math.radians(90), 0.0, math.radians(180))
    assert len(p) == 6 and list(p.labels) == [0, 0, 0, 1, 1, 1]


def test_sh_matrix_shapes_of_schemes():
    assert sh_matrix(3, gen_fibonacci(32).colatitude, gen_fibonacci(32).phi).shape == (16, 32)
