import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import SphericalVoronoi

from sphcond.errors import DegenerateGeometryError
from sphcond.geometry import d_measure, spherical_voronoi, voronoi_areas
from sphcond.points import PointSet
from sphcond.sampling import gen_fibonacci, load_tdesign


def random_points(rng, Q):
    v = rng.standard_normal((Q, 3))
    return PointSet.from_xyz(v)


@pytest.mark.parametrize("Q", [4, 10, 57, 300])
def test_areas_match_scipy(rng, Q):
    p = random_points(rng, Q)
    sv = SphericalVoronoi(p.xyz())
    np.testing.assert_allclose(voronoi_areas(p), sv.calculate_areas(), rtol=1e-9, atol=1e-12)


@given(st.integers(4, 120), st.integers(0, 2**32 - 1))
def test_areas_sum_to_sphere(Q, seed):
    p = random_points(np.random.default_rng(seed), Q)
    assert voronoi_areas(p).sum() == pytest.approx(4 * math.pi, abs=1e-9)


def test_regular_polyhedra_have_zero_d():
    for name in ("T2Q4", "T3Q6", "T3Q8", "T5Q12"):
        rep = d_measure(load_tdesign(name))
        assert rep.d_measure == pytest.approx(0.0, abs=1e-12)
        assert rep.mean_density == pytest.approx(rep.q / (4 * math.pi))


def test_d_measure_closed_form_two_cell_sizes():
    # octahedron + its 8 face centres: 6 vertex cells and 8 face cells
    octa = load_tdesign("T3Q6").xyz()
    cube = load_tdesign("T3Q8").xyz()
    p = PointSet.from_xyz(np.vstack([octa, cube]))
    a = voronoi_areas(p)
    d = 1 / a
    dh = 14 / (4 * math.pi)
    nu = np.sum(a / (4 * math.pi) * (d - dh) ** 2)
    assert d_measure(p).nu == pytest.approx(nu)
    assert d_measure(p).d_measure == pytest.approx(nu * math.sqrt(2 * math.pi) / dh)
    assert d_measure(p).d_measure > 0


def test_fibonacci_nearly_uniform():
    assert d_measure(gen_fibonacci(200)).d_measure < 0.1


def test_cells_report_density():
    cells = spherical_voronoi(load_tdesign("T3Q6"))
    assert len(cells) == 6
    for c in cells:
        assert c.area == pytest.approx(4 * math.pi / 6)
        assert c.density == pytest.approx(6 / (4 * math.pi))


def test_degenerate_inputs():
    with pytest.raises(DegenerateGeometryError):
        voronoi_areas(PointSet([0.1, 0.2, 0.3], [0, 1, 2]))
    dup = load_tdesign("T3Q6").xyz()
    with pytest.raises(DegenerateGeometryError):
        voronoi_areas(PointSet.from_xyz(np.vstack([dup, dup[:1]])))
    ring = np.column_stack([np.cos(np.arange(6)), np.sin(np.arange(6)), np.zeros(6)])
    with pytest.raises(DegenerateGeometryError):
        voronoi_areas(PointSet.from_xyz(ring))
