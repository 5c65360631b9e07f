"""Spherical harmonic fitting and interpolation of HRTF-like directional data.

Measured data are replaced by synthetic band-limited fields with a known
generating series, so interpolation errors can be computed exactly. A
loader for CIPIC-format ``.mat`` files is provided for real data.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, RankDeficientError
from .points import Direction, PointSet, to_interaural
from .sampling import cipic_grid, gen_ecc, gen_mcc
from .sh import Basis, build_shm, eigen_summary, gram, n_coeffs

SPEED_OF_SOUND = 340.0
MAGNITUDE_FLOOR = 1e-12


def wavenumbers_from_frequencies(freqs_hz) -> np.ndarray:
    return 2 * np.pi * np.asarray(freqs_hz, dtype=float) / SPEED_OF_SOUND


DEFAULT_FREQUENCIES = np.linspace(500.0, 16000.0, 16)


@dataclass(frozen=True, eq=False)
class DirectionalSpectrum:
    """Complex responses, one row per direction and one column per wavenumber."""

    directions: PointSet
    wavenumbers: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        k = np.atleast_1d(np.asarray(self.wavenumbers, dtype=float))
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape != (len(self.directions), k.size):
            raise DomainError(f"values shape {v.shape} does not match "
                              f"{len(self.directions)} directions x {k.size} wavenumbers")
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class ShSpectrumCoefficients:
    """``H_nm(k)`` as a ``(N+1)^2 x K`` matrix, with the fit residual.

    ``residual`` is ``||Y^T H_nm - H|| / ||H||`` over all wavenumbers (zero
    for coefficients that were not fitted).
    """

    values: np.ndarray
    order: int
    wavenumbers: np.ndarray
    basis: Basis = Basis.COMPLEX
    residual: float = 0.0
    kappa: float = math.nan

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != n_coeffs(self.order):
            raise DomainError(f"need {n_coeffs(self.order)} coefficients per wavenumber for order {self.order}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "wavenumbers", np.atleast_1d(np.asarray(self.wavenumbers, dtype=float)))


def fit_sh(data: DirectionalSpectrum, order: int, basis=Basis.COMPLEX) -> ShSpectrumCoefficients:
    """Least-squares SH coefficients of ``data`` at every wavenumber.

    Raises
    ------
    RankDeficientError
        Fewer directions than coefficients, or an SHM without full row rank;
        the exception carries the condition number.
    """
    shm = build_shm(data.directions, order, basis)
    if shm.Q < shm.P:
        raise RankDeficientError(f"{shm.Q} directions cannot determine {shm.P} coefficients", math.inf)
    kappa = eigen_summary(gram(shm)).kappa
    if not math.isfinite(kappa):
        raise RankDeficientError("spherical harmonic matrix is rank deficient", kappa)
    Yt = shm.entries.T
    X, *_ = np.linalg.lstsq(Yt, data.values, rcond=None)
    denom = np.linalg.norm(data.values)
    residual = float(np.linalg.norm(Yt @ X - data.values) / denom) if denom else 0.0
    return ShSpectrumCoefficients(X, order, data.wavenumbers, Basis(basis), residual, kappa)


def interpolate(coeffs: ShSpectrumCoefficients, target, k_index=None):
    """Evaluate ``sum_nm H_nm(k) Y_n^m`` at ``target``.

    ``target`` may be a :class:`Direction` (returns a scalar for one
    ``k_index`` or a length-K vector) or a :class:`PointSet` (returns a
    :class:`DirectionalSpectrum`, restricted to ``k_index`` when given).
    """
    single = isinstance(target, Direction)
    pts = PointSet([target.theta], [target.phi], target.convention) if single else target
    Y = build_shm(pts, coeffs.order, coeffs.basis).entries
    X = coeffs.values
    k = coeffs.wavenumbers
    if k_index is not None:
        if not -X.shape[1] <= k_index < X.shape[1]:
            raise DomainError(f"k_index {k_index} out of range")
        X = X[:, [k_index]]
        k = k[[k_index]]
    vals = Y.T @ X
    if single:
        return vals[0, 0] if k_index is not None else vals[0]
    return DirectionalSpectrum(pts, k, vals)


def lsd(reference: DirectionalSpectrum, test: DirectionalSpectrum) -> np.ndarray:
    """Log-spectral distortion per direction, in dB.

    RMS over wavenumbers of ``20 log10(|H_ref| / |H_test|)``, magnitudes
    floored at ``1e-12``.
    """
    if reference.values.shape != test.values.shape:
        raise DomainError(f"shape mismatch {reference.values.shape} vs {test.values.shape}")
    if not np.allclose(reference.wavenumbers, test.wavenumbers, rtol=1e-12, atol=0):
        raise DomainError("wavenumbers differ")
    a = np.maximum(np.abs(reference.values), MAGNITUDE_FLOOR)
    b = np.maximum(np.abs(test.values), MAGNITUDE_FLOOR)
    db = 20.0 * np.log10(a / b)
    return np.sqrt(np.mean(db ** 2, axis=1))


@dataclass(frozen=True, eq=False)
class SyntheticField:
    """Band-limited random field given by its SH coefficients."""

    coeffs: ShSpectrumCoefficients
    seed: int

    @property
    def order(self) -> int:
        return self.coeffs.order

    def sample(self, points: PointSet, noise: float = 0.0, rng=None) -> DirectionalSpectrum:
        """Evaluate on ``points``; ``noise`` adds complex Gaussian noise.

        The noise standard deviation is ``noise`` times the RMS magnitude of
        the clean values.
        """
        clean = interpolate(self.coeffs, points)
        if noise <= 0:
            return clean
        rng = np.random.default_rng(rng)
        scale = noise * np.sqrt(np.mean(np.abs(clean.values) ** 2))
        shape = clean.values.shape
        n = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return DirectionalSpectrum(points, clean.wavenumbers, clean.values + scale * n / math.sqrt(2))


def synth_field(order: int, seed: int = 0, wavenumbers=None, decay: float = 1.0) -> SyntheticField:
    """Seeded random field of SH order ``order``.

    Degree ``n >= 1`` coefficients are circular complex Gaussian with
    standard deviation ``0.5 / (1 + n)**decay``. The degree-0 term holds the
    mean level near 1 so magnitudes stay away from zero, as with HRTFs.
    """
    if order < 0:
        raise DomainError("order must be >= 0")
    k = wavenumbers_from_frequencies(DEFAULT_FREQUENCIES) if wavenumbers is None else np.atleast_1d(
        np.asarray(wavenumbers, dtype=float))
    rng = np.random.default_rng(seed)
    P, K = n_coeffs(order), k.size
    degree = np.floor(np.sqrt(np.arange(P))).astype(int)
    sigma = 0.5 / (1.0 + degree) ** decay
    X = sigma[:, None] * (rng.standard_normal((P, K)) + 1j * rng.standard_normal((P, K))) / math.sqrt(2)
    X[0] = math.sqrt(4 * math.pi) * (1.0 + 0.25 * rng.standard_normal(K))
    return SyntheticField(ShSpectrumCoefficients(X, order, k), seed)


@dataclass(frozen=True, eq=False)
class ProtocolReport:
    """Outcome of fitting the same field on the ECC and MCC grids."""

    order: int
    noise: float
    kappa_ecc: float
    kappa_mcc: float
    evaluation: PointSet
    lsd_ecc: np.ndarray
    lsd_mcc: np.ndarray

    @property
    def mcc_wins(self) -> np.ndarray:
        return self.lsd_mcc < self.lsd_ecc

    @property
    def median_ecc(self) -> float:
        return float(np.median(self.lsd_ecc))

    @property
    def median_mcc(self) -> float:
        return float(np.median(self.lsd_mcc))

    def band_win_fraction(self, lo_deg=50.0, hi_deg=130.0) -> float:
        """Share of evaluation directions with polar elevation in the band won by MCC."""
        _, polar = to_interaural(self.evaluation)
        el = np.rad2deg(polar)
        band = (el >= lo_deg) & (el <= hi_deg)
        return float(self.mcc_wins[band].mean()) if band.any() else math.nan

    def to_dict(self):
        lat, pol = to_interaural(self.evaluation)
        return {
            "order": self.order, "noise": self.noise,
            "kappa_ecc": self.kappa_ecc, "kappa_mcc": self.kappa_mcc,
            "median_lsd_ecc": self.median_ecc, "median_lsd_mcc": self.median_mcc,
            "mcc_win_fraction": float(self.mcc_wins.mean()),
            "mcc_win_fraction_50_130": self.band_win_fraction(),
            "lateral_deg": np.rad2deg(lat).tolist(), "elevation_deg": np.rad2deg(pol).tolist(),
            "lsd_ecc": self.lsd_ecc.tolist(), "lsd_mcc": self.lsd_mcc.tolist(),
        }


def run_ecc_mcc_protocol(order: int = 10, seed: int = 0, noise: float = 0.0,
                         field_order: int | None = None, wavenumbers=None) -> ProtocolReport:
    """Fit one synthetic field on the ECC and MCC grids and compare on CIPIC.

    Both grids see the same field (order ``field_order``, default ``order``)
    with independent noise draws derived from ``seed``; each fit is
    interpolated onto the 1250-point CIPIC grid and scored by LSD against
    the noiseless truth.
    """
    field = synth_field(order if field_order is None else field_order, seed, wavenumbers)
    evaluation = cipic_grid()
    truth = field.sample(evaluation)
    ecc, mcc = gen_ecc(), gen_mcc()
    rng_e, rng_m = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    fit_e = fit_sh(field.sample(ecc, noise, rng_e), order)
    fit_m = fit_sh(field.sample(mcc, noise, rng_m), order)
    return ProtocolReport(order, noise, fit_e.kappa, fit_m.kappa, evaluation,
                          lsd(truth, interpolate(fit_e, evaluation)),
                          lsd(truth, interpolate(fit_m, evaluation)))


def load_cipic_hrir(path, ear: str = "left", n_fft: int | None = None,
                    sample_rate: float = 44100.0) -> DirectionalSpectrum:
    """Spectrum of a CIPIC ``hrir_final.mat`` file on the 1250-point grid.

    The file stores ``hrir_l`` / ``hrir_r`` arrays of shape
    ``(25, 50, taps)`` indexed by lateral hoop and elevation.
    """
    from scipy.io import loadmat

    key = {"left": "hrir_l", "right": "hrir_r"}.get(ear)
    if key is None:
        raise DomainError("ear must be 'left' or 'right'")
    mat = loadmat(path)
    if key not in mat:
        raise DomainError(f"{path}: no variable {key!r}")
    h = np.asarray(mat[key], dtype=float)
    if h.shape[:2] != (25, 50):
        raise DomainError(f"{key} has shape {h.shape}; expected (25, 50, taps)")
    n_fft = h.shape[2] if n_fft is None else n_fft
    H = np.fft.rfft(h.reshape(1250, -1), n=n_fft, axis=1)
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    return DirectionalSpectrum(cipic_grid(), wavenumbers_from_frequencies(freqs), H)


def write_spectrum(spec: DirectionalSpectrum, path) -> tuple[Path, Path]:
    """Write a JSON header (directions, wavenumbers) and a CSV value matrix.

    The CSV has one row per direction and ``re_j, im_j`` column pairs per
    wavenumber, written with ``repr`` precision.
    """
    path = Path(path)
    csv_path = path.with_suffix(".csv")
    d = spec.directions
    header = {
        "convention": d.convention.value,
        "theta": d.theta.tolist(), "phi": d.phi.tolist(),
        "labels": None if d.labels is None else d.labels.tolist(),
        "wavenumbers": spec.wavenumbers.tolist(),
        "values": csv_path.name,
    }
    path.with_suffix(".json").write_text(json.dumps(header))
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{p}_{j}" for j in range(spec.wavenumbers.size) for p in ("re", "im")])
        for row in spec.values:
            w.writerow([repr(float(x)) for v in row for x in (v.real, v.imag)])
    return path.with_suffix(".json"), csv_path


def read_spectrum(path) -> DirectionalSpectrum:
    path = Path(path).with_suffix(".json")
    header = json.loads(path.read_text())
    pts = PointSet(header["theta"], header["phi"], header["convention"], header.get("labels"))
    raw = np.loadtxt(path.parent / header["values"], delimiter=",", skiprows=1, ndmin=2)
    values = raw[:, 0::2] + 1j * raw[:, 1::2]
    return DirectionalSpectrum(pts, header["wavenumbers"], values)
