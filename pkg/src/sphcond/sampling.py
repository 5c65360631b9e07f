"""Reference sampling schemes on the sphere.

Fibonacci lattices, Gauss-Legendre and equiangular grids, tabulated
spherical t-designs, and interaural-polar HRTF grids (CIPIC layout and
its equi-sampled / modified variants).
"""
from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import DomainError
from .points import Convention, PointSet, from_interaural

GOLDEN_FRACTION = (math.sqrt(5.0) - 1.0) / 2.0

#: CIPIC lateral angles in degrees, left to right
CIPIC_LATERAL_DEG = (-80, -65, -55, -45, -40, -35, -30, -25, -20, -15, -10, -5, 0,
                     5, 10, 15, 20, 25, 30, 35, 40, 45, 55, 65, 80)
CIPIC_ELEVATION_START_DEG = -45.0
CIPIC_ELEVATION_STOP_DEG = 230.625
CIPIC_ELEVATION_STEP_DEG = 5.625
ECC_ELEVATION_STEP_DEG = 11.25

#: modified-CIPIC elevation spacing (degrees) in the bands near the horizontal plane
MCC_SPACING_DEG = {80: 33.75, 65: 33.75, 55: 33.75,
                   45: 28.125, 40: 28.125, 35: 28.125, 30: 28.125,
                   25: 22.5, 20: 22.5, 15: 22.5,
                   10: 16.875, 5: 16.875,
                   0: 11.25}
MCC_TOTAL = 625


def gen_fibonacci(Q: int) -> PointSet:
    """Fibonacci lattice of ``Q`` points, elevation above the xy plane."""
    if Q < 1:
        raise DomainError("Q must be >= 1")
    i = np.arange(1, Q + 1)
    phi = np.mod(2 * np.pi * GOLDEN_FRACTION * i, 2 * np.pi)
    theta = np.arcsin(np.clip(2.0 * i / Q - 1.0, -1.0, 1.0))
    return PointSet(theta, phi, Convention.ABOVE_XY)


def gen_gaussian(N: int, return_weights: bool = False):
    """Gauss-Legendre colatitudes times ``2(N+1)`` equispaced azimuths.

    With ``return_weights`` the quadrature weights (summing to 4*pi) are
    returned as well; they integrate band-limited functions of order ``N``
    exactly.
    """
    if N < 0:
        raise DomainError("N must be >= 0")
    x, w = np.polynomial.legendre.leggauss(N + 1)
    col = np.arccos(x)[::-1]
    w = w[::-1]
    n_az = 2 * (N + 1)
    az = np.arange(n_az) * (2 * np.pi / n_az)
    C, A = np.meshgrid(col, az, indexing="ij")
    pts = PointSet(C.ravel(), A.ravel(), Convention.FROM_Z)
    if return_weights:
        W = np.repeat(w, n_az) * (2 * np.pi / n_az)
        return pts, W
    return pts


def gen_equiangular(N: int) -> PointSet:
    """``2(N+1)`` colatitude rings times ``2(N+1)`` azimuths.

    Rings sit at the midpoints ``pi*(2j+1)/(4(N+1))`` so no ring collapses
    onto a pole; the rings still crowd together near both poles.
    """
    if N < 0:
        raise DomainError("N must be >= 0")
    L = 2 * (N + 1)
    col = np.pi * (2 * np.arange(L) + 1) / (2 * L)
    az = np.arange(L) * (2 * np.pi / L)
    C, A = np.meshgrid(col, az, indexing="ij")
    return PointSet(C.ravel(), A.ravel(), Convention.FROM_Z)


@lru_cache(maxsize=1)
def _tdesign_table():
    raw = resources.files("sphcond").joinpath("data/tdesigns.json").read_text()
    return json.loads(raw)


def tdesign_names() -> list[str]:
    return list(_tdesign_table()["designs"])


def tdesign_strength(name: str) -> int:
    try:
        return int(_tdesign_table()["designs"][name]["strength"])
    except KeyError:
        raise DomainError(f"unknown t-design {name!r}; known: {tdesign_names()}") from None


def tdesign_order(name: str) -> int:
    """Highest SH order ``N`` with ``2N <= T`` for the design."""
    return tdesign_strength(name) // 2


def load_tdesign(name: str) -> PointSet:
    table = _tdesign_table()["designs"]
    if name not in table:
        raise DomainError(f"unknown t-design {name!r}; known: {list(table)}")
    return PointSet.from_xyz(np.asarray(table[name]["xyz"], dtype=float))


def gen_interaural_grid(lateral_angles, elevation_step, elevation_start=None,
                        elevation_stop=None) -> PointSet:
    """Hoops of constant lateral angle sampled uniformly in polar elevation.

    Angles are in radians. Elevations run from ``elevation_start`` in steps
    of ``elevation_step`` while not exceeding ``elevation_stop`` (CIPIC
    range -45 to 230.625 degrees by default). Point ``labels`` carry the
    hoop index in the order of ``lateral_angles``.
    """
    lateral = np.atleast_1d(np.asarray(lateral_angles, dtype=float))
    if lateral.size == 0:
        raise DomainError("need at least one lateral angle")
    if not elevation_step or elevation_step <= 0:
        raise DomainError("elevation_step must be positive")
    start = np.deg2rad(CIPIC_ELEVATION_START_DEG) if elevation_start is None else elevation_start
    stop = np.deg2rad(CIPIC_ELEVATION_STOP_DEG) if elevation_stop is None else elevation_stop
    count = int(math.floor((stop - start) / elevation_step + 1e-9)) + 1
    if count < 1:
        raise DomainError("empty elevation range")
    elev = start + elevation_step * np.arange(count)
    L, E = np.meshgrid(lateral, elev, indexing="ij")
    hoop = np.repeat(np.arange(lateral.size), count)
    return from_interaural(L.ravel(), E.ravel(), labels=hoop)


def cipic_grid() -> PointSet:
    """1250-point CIPIC layout: 25 hoops x 50 elevations at 5.625 degrees."""
    return gen_interaural_grid(np.deg2rad(CIPIC_LATERAL_DEG), np.deg2rad(CIPIC_ELEVATION_STEP_DEG))


def gen_ecc() -> PointSet:
    """Equi-sampled CIPIC configuration: 25 hoops x 25 elevations at 11.25 degrees."""
    return gen_interaural_grid(np.deg2rad(CIPIC_LATERAL_DEG), np.deg2rad(ECC_ELEVATION_STEP_DEG))


def _band(start, stop, step):
    k = int(math.floor((stop - start) / step + 1e-9))
    return [start + step * i for i in range(k + 1)]


def mcc_elevations_deg() -> list[list[float]]:
    """Per-hoop elevation lists (degrees) of the modified CIPIC configuration.

    In the front band [-45, 45] and the back band [135, 230.625] each hoop
    uses its tabulated spacing, counted from the start of the band. The
    overhead band (45, 135) receives the remaining points of the 625 total,
    shared as evenly as possible over the hoops (the lateral-0 hoop, which
    already has the densest bands, absorbs any shortfall) and spaced
    uniformly inside the open band.
    """
    sparse = []
    for lat in CIPIC_LATERAL_DEG:
        s = MCC_SPACING_DEG[abs(lat)]
        front = _band(-45.0, 45.0, s)
        back = _band(135.0, CIPIC_ELEVATION_STOP_DEG, s)
        sparse.append((front, back))
    remaining = MCC_TOTAL - sum(len(f) + len(b) for f, b in sparse)
    J = len(CIPIC_LATERAL_DEG)
    per = -(-remaining // J)
    overhead = [per] * J
    centre = CIPIC_LATERAL_DEG.index(0)
    overhead[centre] -= per * J - remaining
    if overhead[centre] < 0:
        raise AssertionError("overhead allocation failed")
    out = []
    for (front, back), k in zip(sparse, overhead):
        mid = list(45.0 + 90.0 * np.arange(1, k + 1) / (k + 1))
        out.append(front + mid + back)
    return out


def gen_mcc() -> PointSet:
    """Modified CIPIC configuration, sparse near the horizontal plane (625 points)."""
    lat, el, hoop = [], [], []
    for j, (lat_deg, elevs) in enumerate(zip(CIPIC_LATERAL_DEG, mcc_elevations_deg())):
        lat += [lat_deg] * len(elevs)
        el += elevs
        hoop += [j] * len(elevs)
    return from_interaural(np.deg2rad(lat), np.deg2rad(el), labels=hoop)


SCHEMES = ("fibonacci", "gaussian", "equiangular", "tdesign", "cipic", "ecc", "mcc", "interaural")
