"""Spherical harmonic matrices and their eigenvalue summaries.

Rows of a spherical harmonic matrix (SHM) enumerate ``(n, m)`` as
``(0,0), (1,-1), (1,0), (1,1), ..., (N,N)``, i.e. row ``n*n + n + m``.
Columns are sampling directions.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .points import Direction, PointSet

#: eigenvalues below this fraction of lambda_max count as zero
RANK_FLOOR = 1e-12


class Basis(str, enum.Enum):
    COMPLEX = "complex"
    REAL = "real"


class AngleMode(str, enum.Enum):
    """How stored ``theta`` values enter the harmonics.

    ``GEOMETRIC`` converts every point to colatitude first. ``LITERAL`` feeds
    the stored ``theta`` unchanged as the polar argument, whatever its
    convention; an elevation measured above the xy plane is then read as if
    it were measured from the z axis. Published condition numbers of
    Fibonacci lattices in the spatial-audio literature follow this reading.
    """

    GEOMETRIC = "geometric"
    LITERAL = "literal"


def sh_index(n: int, m: int) -> int:
    return n * n + n + m


def n_coeffs(order: int) -> int:
    return (order + 1) ** 2


def _legendre_normalized(order: int, x: np.ndarray) -> np.ndarray:
    """Orthonormalized associated Legendre values, Condon-Shortley phase.

    Returns ``P[n, m, :]`` for ``0 <= m <= n <= order`` such that
    ``P[n, m] * exp(1j*m*phi)`` is the orthonormal ``Y_n^m``.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    P = np.zeros((order + 1, order + 1) + x.shape)
    P[0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, order + 1):
        P[m, m] = -math.sqrt((2 * m + 1) / (2.0 * m)) * s * P[m - 1, m - 1]
    for m in range(order):
        P[m + 1, m] = math.sqrt(2 * m + 3) * x * P[m, m]
    for m in range(order + 1):
        for n in range(m + 2, order + 1):
            a = math.sqrt((4 * n * n - 1) / (n * n - m * m))
            b = math.sqrt(((n - 1) ** 2 - m * m) / (4 * (n - 1) ** 2 - 1))
            P[n, m] = a * (x * P[n - 1, m] - b * P[n - 2, m])
    return P


def sh_matrix(order: int, colatitude, azimuth, basis=Basis.COMPLEX) -> np.ndarray:
    """Evaluate all harmonics up to ``order``; returns ``((order+1)**2, Q)``."""
    if order < 0:
        raise DomainError("order must be >= 0")
    basis = Basis(basis)
    col = np.atleast_1d(np.asarray(colatitude, dtype=float))
    az = np.atleast_1d(np.asarray(azimuth, dtype=float))
    P = _legendre_normalized(order, np.cos(col))
    out = np.empty((n_coeffs(order), col.size), dtype=complex if basis is Basis.COMPLEX else float)
    for n in range(order + 1):
        for m in range(0, n + 1):
            if basis is Basis.COMPLEX:
                y = P[n, m] * np.exp(1j * m * az)
                out[sh_index(n, m)] = y
                if m:
                    out[sh_index(n, -m)] = (-1) ** m * np.conj(y)
            else:
                if m == 0:
                    out[sh_index(n, 0)] = P[n, 0]
                else:
                    # (-1)^m undoes the Condon-Shortley phase carried by P
                    c = (-1) ** m * math.sqrt(2.0) * P[n, m]
                    out[sh_index(n, m)] = c * np.cos(m * az)
                    out[sh_index(n, -m)] = c * np.sin(m * az)
    return out


def eval_sh(n: int, m: int, d: Direction, basis=Basis.COMPLEX):
    """Value of the orthonormal harmonic ``Y_n^m`` at direction ``d``."""
    if n < 0 or abs(m) > n:
        raise DomainError(f"invalid harmonic (n={n}, m={m}); need 0 <= |m| <= n")
    return sh_matrix(n, d.colatitude, d.phi, basis)[sh_index(n, m), 0]


@dataclass(frozen=True, eq=False)
class ShMatrix:
    entries: np.ndarray
    order: int
    source: PointSet | None = None
    basis: Basis = Basis.COMPLEX
    angle_mode: AngleMode = AngleMode.GEOMETRIC

    @property
    def shape(self):
        return self.entries.shape

    @property
    def P(self) -> int:
        return self.entries.shape[0]

    @property
    def Q(self) -> int:
        return self.entries.shape[1]

    def columns(self, mask) -> "ShMatrix":
        mask = np.asarray(mask)
        src = None if self.source is None else self.source.subset(mask)
        return ShMatrix(self.entries[:, mask], self.order, src, self.basis, self.angle_mode)

    @property
    def kappa(self) -> float:
        return condition_number(self)


def polar_angles(points: PointSet, angle_mode=AngleMode.GEOMETRIC) -> np.ndarray:
    if AngleMode(angle_mode) is AngleMode.LITERAL:
        return points.theta
    return points.colatitude


def build_shm(points: PointSet, order: int, basis=Basis.COMPLEX,
              angle_mode=AngleMode.GEOMETRIC) -> ShMatrix:
    basis, angle_mode = Basis(basis), AngleMode(angle_mode)
    Y = sh_matrix(order, polar_angles(points, angle_mode), points.phi, basis)
    Y.setflags(write=False)
    return ShMatrix(Y, order, points, basis, angle_mode)


def _entries(A) -> np.ndarray:
    return A.entries if isinstance(A, ShMatrix) else np.asarray(A)


def gram(A, mask=None) -> np.ndarray:
    """``A diag(mask) A^H``; the full ``A A^H`` when ``mask`` is None."""
    A = _entries(A)
    if mask is None:
        return A @ A.conj().T
    mask = np.asarray(mask)
    if mask.dtype != bool:
        mask = mask.astype(bool)
    if mask.shape != (A.shape[1],):
        raise DomainError(f"mask length {mask.shape} does not match {A.shape[1]} columns")
    B = A[:, mask]
    return B @ B.conj().T


@dataclass(frozen=True)
class EigenSummary:
    lambda_min: float
    lambda_max: float
    kappa: float


def kappa_from_eigs(lambda_min: float, lambda_max: float) -> float:
    if lambda_max <= 0 or lambda_min <= RANK_FLOOR * lambda_max:
        return math.inf
    return math.sqrt(lambda_max / lambda_min)


def eigen_summary(H) -> EigenSummary:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError("expected a square matrix")
    scale = max(np.abs(H).max(), np.finfo(float).tiny)
    if np.abs(H - H.conj().T).max() > 1e-10 * scale:
        raise DomainError("matrix is not Hermitian")
    w = np.linalg.eigvalsh(H)
    lmax = max(float(w[-1]), 0.0)
    lmin = float(w[0])
    if lmin < 0 and lmin >= -RANK_FLOOR * lmax:
        lmin = 0.0
    return EigenSummary(lmin, lmax, kappa_from_eigs(lmin, lmax))


def condition_number(shm) -> float:
    """2-norm condition number ``sigma_max / sigma_min`` via the Gram matrix."""
    return eigen_summary(gram(shm)).kappa
