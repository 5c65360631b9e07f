"""Directions and point sets on the unit sphere.

Two elevation conventions are supported. ``FROM_Z`` stores the polar angle
(colatitude, 0 at the north pole); ``ABOVE_XY`` stores the elevation above
the horizontal plane. Azimuth is always in ``[0, 2*pi)``.
"""
from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError

_ANGLE_TOL = 1e-12


class Convention(str, enum.Enum):
    FROM_Z = "from_z"
    ABOVE_XY = "above_xy"


def _check_theta(theta, convention):
    theta = np.asarray(theta, dtype=float)
    if convention is Convention.FROM_Z:
        lo, hi = 0.0, np.pi
    else:
        lo, hi = -np.pi / 2, np.pi / 2
    if np.any(theta < lo - _ANGLE_TOL) or np.any(theta > hi + _ANGLE_TOL):
        raise DomainError(f"theta outside [{lo:.6g}, {hi:.6g}] for convention {convention.value}")
    return np.clip(theta, lo, hi)


@dataclass(frozen=True)
class Direction:
    theta: float
    phi: float
    convention: Convention = Convention.FROM_Z

    def __post_init__(self):
        object.__setattr__(self, "convention", Convention(self.convention))
        object.__setattr__(self, "theta", float(_check_theta(self.theta, self.convention)))
        object.__setattr__(self, "phi", float(np.mod(self.phi, 2 * np.pi)))

    @property
    def colatitude(self) -> float:
        if self.convention is Convention.FROM_Z:
            return self.theta
        return np.pi / 2 - self.theta

    def xyz(self) -> np.ndarray:
        return PointSet([self.theta], [self.phi], self.convention).xyz()[0]


@dataclass(frozen=True, eq=False)
class PointSet:
    """Ordered directions sharing one elevation convention.

    ``labels`` is optional integer metadata per point, used for the hoop
    (interaural circle) index of HRTF grids.
    """

    theta: np.ndarray
    phi: np.ndarray
    convention: Convention = Convention.FROM_Z
    labels: np.ndarray | None = field(default=None)

    def __post_init__(self):
        conv = Convention(self.convention)
        theta = _check_theta(np.atleast_1d(np.asarray(self.theta, dtype=float)), conv)
        phi = np.mod(np.atleast_1d(np.asarray(self.phi, dtype=float)), 2 * np.pi)
        if theta.ndim != 1 or theta.shape != phi.shape:
            raise DomainError("theta and phi must be 1-d arrays of equal length")
        if theta.size < 1:
            raise DomainError("a point set needs at least one direction")
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels, dtype=int)
            if labels.shape != theta.shape:
                raise DomainError("labels must have one entry per point")
            labels.setflags(write=False)
        theta.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "convention", conv)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.theta.size

    def __getitem__(self, i) -> Direction:
        return Direction(self.theta[i], self.phi[i], self.convention)

    @property
    def directions(self) -> list[Direction]:
        return [self[i] for i in range(len(self))]

    @property
    def colatitude(self) -> np.ndarray:
        if self.convention is Convention.FROM_Z:
            return self.theta
        return np.pi / 2 - self.theta

    def to_convention(self, convention) -> "PointSet":
        convention = Convention(convention)
        if convention is self.convention:
            return self
        return PointSet(np.pi / 2 - self.theta, self.phi, convention, self.labels)

    def xyz(self) -> np.ndarray:
        col = self.colatitude
        s = np.sin(col)
        return np.column_stack([s * np.cos(self.phi), s * np.sin(self.phi), np.cos(col)])

    @classmethod
    def from_xyz(cls, xyz, labels=None, convention=Convention.FROM_Z) -> "PointSet":
        xyz = np.atleast_2d(np.asarray(xyz, dtype=float))
        xyz = xyz / np.linalg.norm(xyz, axis=1, keepdims=True)
        col = np.arctan2(np.hypot(xyz[:, 0], xyz[:, 1]), xyz[:, 2])
        phi = np.arctan2(xyz[:, 1], xyz[:, 0])
        pts = cls(col, phi, Convention.FROM_Z, labels)
        return pts.to_convention(convention)

    def subset(self, index) -> "PointSet":
        index = np.asarray(index)
        labels = None if self.labels is None else self.labels[index]
        return PointSet(self.theta[index], self.phi[index], self.convention, labels)

    def concat(self, other: "PointSet") -> "PointSet":
        other = other.to_convention(self.convention)
        if (self.labels is None) != (other.labels is None):
            raise DomainError("cannot concatenate labelled and unlabelled point sets")
        labels = None if self.labels is None else np.concatenate([self.labels, other.labels])
        return PointSet(np.concatenate([self.theta, other.theta]),
                        np.concatenate([self.phi, other.phi]), self.convention, labels)

    def rotated(self, rotation: np.ndarray) -> "PointSet":
        """Apply a 3x3 rotation matrix to every direction."""
        return PointSet.from_xyz(self.xyz() @ np.asarray(rotation).T, self.labels, self.convention)


def to_interaural(points: PointSet):
    """Return (lateral, polar) angles in radians of the interaural-polar system.

    The interaural axis is +y; polar angle 0 is the front (+x) and pi/2 is
    overhead. Polar angles are wrapped into ``[-pi/2, 3*pi/2)``.
    """
    x, y, z = points.xyz().T
    lateral = np.arcsin(np.clip(y, -1.0, 1.0))
    polar = np.arctan2(z, x)
    polar = np.where(polar < -np.pi / 2, polar + 2 * np.pi, polar)
    return lateral, polar


def from_interaural(lateral, polar, labels=None) -> PointSet:
    lateral = np.asarray(lateral, dtype=float)
    polar = np.asarray(polar, dtype=float)
    xyz = np.column_stack([np.cos(lateral) * np.cos(polar), np.sin(lateral),
                           np.cos(lateral) * np.sin(polar)])
    return PointSet.from_xyz(xyz, labels)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_pointset(points: PointSet, path) -> tuple[Path, Path]:
    """Write ``theta,phi`` CSV plus a JSON sidecar with convention and labels."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "phi"])
        for t, p in zip(points.theta, points.phi):
            w.writerow([_fmt(t), _fmt(p)])
    sidecar = path.with_suffix(".json")
    meta = {"convention": points.convention.value,
            "labels": None if points.labels is None else points.labels.tolist()}
    sidecar.write_text(json.dumps(meta))
    return path, sidecar


def read_pointset(path) -> PointSet:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"theta", "phi"}:
        raise DomainError(f"{path}: expected a CSV with header theta,phi")
    theta = [float(r["theta"]) for r in rows]
    phi = [float(r["phi"]) for r in rows]
    sidecar = path.with_suffix(".json")
    convention, labels = Convention.FROM_Z, None
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        convention = Convention(meta.get("convention", "from_z"))
        labels = meta.get("labels")
    return PointSet(theta, phi, convention, labels)
