"""Ambisonics encoding, decoding and reproduction error of loudspeaker layouts.

Loudspeakers are modelled as plane-wave sources. A source field is encoded
as SH coefficients ``b~ = Y~ s``; a decoder ``D`` maps coefficients to
loudspeaker gains ``g = D b~``, whose field re-encodes as ``b = Y g``.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DomainError, RankDeficientError
from .points import Convention, Direction, PointSet
from .sh import Basis, build_shm, eigen_summary, gram, n_coeffs, ShMatrix

#: relative tolerance under which two reproduction errors count as a tie
TIE_RTOL = 1e-9


class DecoderKind(str, enum.Enum):
    SAMPLING = "sampling"
    MODE_MATCHING = "mode_matching"
    PSEUDO_INVERSE = "pinv"


@dataclass(frozen=True)
class ShCoefficients:
    values: np.ndarray
    order: int

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape[0] != n_coeffs(self.order):
            raise DomainError(f"expected {n_coeffs(self.order)} coefficients for order {self.order}, got {v.shape[0]}")
        object.__setattr__(self, "values", v)

    def truncated(self, order: int) -> "ShCoefficients":
        if order > self.order:
            raise DomainError("cannot truncate to a higher order")
        return ShCoefficients(self.values[:n_coeffs(order)], order)


@dataclass(frozen=True)
class DecoderMatrix:
    """``Q x (N+1)^2`` matrix mapping SH coefficients to loudspeaker gains."""

    entries: np.ndarray
    kind: DecoderKind
    order: int

    def gains(self, coeffs) -> np.ndarray:
        b = coeffs.values if isinstance(coeffs, ShCoefficients) else np.asarray(coeffs)
        return self.entries @ b[:self.entries.shape[1]]


def _adjoint(Y: np.ndarray, basis: Basis) -> np.ndarray:
    # conjugate transpose for complex harmonics; plain transpose for real ones
    return Y.conj().T if basis is Basis.COMPLEX else Y.T


def encode_plane_waves(sources: PointSet, gains, order: int, basis=Basis.COMPLEX) -> ShCoefficients:
    """SH coefficients ``Y~ s`` of plane waves from ``sources`` with ``gains``."""
    gains = np.atleast_1d(np.asarray(gains))
    if gains.shape != (len(sources),):
        raise DomainError(f"{gains.size} gains for {len(sources)} sources")
    Y = build_shm(sources, order, basis).entries
    return ShCoefficients(Y @ gains, order)


def build_decoder(shm: ShMatrix, kind=DecoderKind.MODE_MATCHING) -> DecoderMatrix:
    """Decoder of the loudspeaker layout whose SHM is ``shm``.

    ``SAMPLING`` is ``(4 pi / Q) Y^H``; ``MODE_MATCHING`` is
    ``Y^H (Y Y^H)^-1`` and needs ``Y Y^H`` invertible; ``PSEUDO_INVERSE`` is the
    Moore-Penrose inverse, equal to mode matching when that exists and the
    minimum-norm least-squares decoder otherwise.
    """
    kind = DecoderKind(kind)
    Y = shm.entries
    Yh = _adjoint(Y, shm.basis)
    if kind is DecoderKind.SAMPLING:
        D = (4 * math.pi / shm.Q) * Yh
    elif kind is DecoderKind.MODE_MATCHING:
        G = gram(Y)
        summary = eigen_summary(G)
        if not math.isfinite(summary.kappa):
            raise RankDeficientError(
                f"Y Y^H is singular ({shm.Q} directions, {shm.P} harmonics); mode matching undefined",
                summary.kappa)
        # Y^H = QR gives Y^H (Y Y^H)^-1 = Q R^-H without forming the squared system
        Qf, R = np.linalg.qr(Yh)
        D = solve_triangular(R, Qf.conj().T, lower=False).conj().T
    else:
        D = np.linalg.pinv(Y)
    return DecoderMatrix(D, kind, shm.order)


def _xi(src_Y_eval, spk_Y_eval, decoder: DecoderMatrix) -> np.ndarray:
    """Reproduction error for every column (source) of ``src_Y_eval``."""
    p = decoder.entries.shape[1]
    b_target = src_Y_eval
    g = decoder.entries @ b_target[:p]
    b = spk_Y_eval @ g
    norm = np.linalg.norm(b_target, axis=0)
    if np.any(norm == 0):
        raise DomainError("target field has zero norm")
    return np.linalg.norm(b - b_target, axis=0) / norm


def reproduction_error(source_dir: Direction, speakers: PointSet, order_encode: int,
                       order_eval: int | None = None, kind=DecoderKind.PSEUDO_INVERSE,
                       basis=Basis.COMPLEX) -> float:
    """Normalized error ``||b - b~|| / ||b~||`` of one plane-wave source.

    The source is decoded from its order-``order_encode`` coefficients and
    the loudspeaker field is compared with the source at ``order_eval``
    (default: ``order_encode``). A larger evaluation order exposes the
    truncation of the encoding.
    """
    if order_encode < 0 or (order_eval is not None and order_eval < 0):
        raise DomainError("orders must be >= 0")
    order_eval = order_encode if order_eval is None else order_eval
    src = PointSet([source_dir.theta], [source_dir.phi], source_dir.convention)
    return float(_xi_many(src, speakers, order_encode, order_eval, kind, basis)[0])


def _xi_many(sources, speakers, order_encode, order_eval, kind, basis):
    top = max(order_encode, order_eval)
    spk = build_shm(speakers, top, basis)
    dec = build_decoder(ShMatrix(spk.entries[:n_coeffs(order_encode)], order_encode, speakers, spk.basis),
                        kind)
    src_Y = build_shm(sources, top, basis).entries[:n_coeffs(order_eval)]
    return _xi(src_Y, spk.entries[:n_coeffs(order_eval)], dec)


def source_grid(n_azimuth: int = 36, n_elevation: int = 18) -> PointSet:
    """Test directions: ``n_azimuth`` azimuths from 0 and ``n_elevation`` colatitude rings.

    Rings sit at the centres of equal colatitude bands (5, 15, ..., 175
    degrees for 18 rings), azimuths at multiples of ``360 / n_azimuth``.
    """
    col = np.pi * (np.arange(n_elevation) + 0.5) / n_elevation
    az = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    A, C = np.meshgrid(az, col, indexing="ij")
    return PointSet(C.ravel(), A.ravel(), Convention.FROM_Z)


@dataclass(frozen=True)
class SweepComparison:
    """Per-direction errors of two layouts and who wins where."""

    directions: PointSet
    xi_a: np.ndarray
    xi_b: np.ndarray
    wins_a: int
    wins_b: int
    ties: int

    @property
    def percent_a(self) -> float:
        return 100.0 * (self.wins_a + 0.5 * self.ties) / len(self.directions)

    @property
    def percent_b(self) -> float:
        return 100.0 * (self.wins_b + 0.5 * self.ties) / len(self.directions)

    def to_dict(self):
        return {
            "xi": {"a": self.xi_a.tolist(), "b": self.xi_b.tolist()},
            "winners": {"a": self.wins_a, "b": self.wins_b, "ties": self.ties,
                        "percent_a": self.percent_a, "percent_b": self.percent_b},
        }


def direction_sweep(speakers_a: PointSet, speakers_b: PointSet, order: int,
                    order_eval: int | None = None, grid: PointSet | None = None,
                    kind=DecoderKind.PSEUDO_INVERSE, threads: int = 1) -> SweepComparison:
    """Compare two layouts over a grid of plane-wave source directions.

    A layout wins a direction when its error is strictly lower; errors equal
    within a relative ``1e-9`` are ties, which count half to each side in
    the percentages.
    """
    grid = source_grid() if grid is None else grid
    order_eval = order if order_eval is None else order_eval
    jobs = [speakers_a, speakers_b]
    if threads > 1:
        with ThreadPoolExecutor(2) as ex:
            xa, xb = ex.map(lambda s: _xi_many(grid, s, order, order_eval, kind, Basis.COMPLEX), jobs)
    else:
        xa, xb = (_xi_many(grid, s, order, order_eval, kind, Basis.COMPLEX) for s in jobs)
    tie = np.abs(xa - xb) <= TIE_RTOL * np.maximum(np.maximum(xa, xb), 1e-300)
    wins_a = int(np.sum((xa < xb) & ~tie))
    wins_b = int(np.sum((xb < xa) & ~tie))
    return SweepComparison(grid, xa, xb, wins_a, wins_b, int(tie.sum()))


def mean_error_by_order(speakers: PointSet, order: int, eval_orders, grid: PointSet | None = None,
                        kind=DecoderKind.PSEUDO_INVERSE) -> np.ndarray:
    """Grid-averaged reproduction error for each evaluation order."""
    grid = source_grid() if grid is None else grid
    return np.array([_xi_many(grid, speakers, order, ne, kind, Basis.COMPLEX).mean()
                     for ne in eval_orders])
