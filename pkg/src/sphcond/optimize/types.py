"""Data types of the subset-selection problem."""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError


class SolverMode(str, enum.Enum):
    EXACT_BNB = "exact"
    LOCAL_SEARCH = "local"


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the inner solvers and of the transition sweep.

    Parameters
    ----------
    mode : SolverMode
        ``EXACT_BNB`` proves optimality; ``LOCAL_SEARCH`` is a seeded heuristic.
    epsilon : float
        Strict inequality ``lambda_min > eta`` is enforced as
        ``lambda_min >= eta + epsilon``.
    seed : int
        Root seed for every random choice of the local search.
    restarts : int
        Independent randomized constructions tried on a cold start.
    max_nodes : int
        Node budget of one branch-and-bound solve.
    threads : int
        Worker threads for restarts / subtrees; ``0`` means all cores.
    max_transitions : int or None
        Optional cap on the number of sweep iterations.
    max_swaps : int
        Swap-move budget of one local-search descent.
    screen : int
        Number of screened swap candidates re-evaluated exactly per move.
    exact_neighbourhood : int
        Evaluate every swap exactly when the neighbourhood has at most this
        many moves.
    dedup : bool
        Drop columns that duplicate an earlier column before searching.
    """

    mode: SolverMode = SolverMode.EXACT_BNB
    epsilon: float = 1e-7
    seed: int = 0
    restarts: int = 4
    max_nodes: int = 5_000_000
    threads: int = 1
    max_transitions: int | None = None
    max_swaps: int = 2000
    screen: int = 24
    exact_neighbourhood: int = 4096
    dedup: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", SolverMode(self.mode))
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if self.restarts < 1:
            raise DomainError("restarts must be >= 1")
        if self.max_nodes < 1 or self.max_swaps < 0 or self.screen < 1:
            raise DomainError("budgets must be positive")
        if self.threads < 0:
            raise DomainError("threads must be >= 0")

    @property
    def workers(self) -> int:
        return self.threads or (os.cpu_count() or 1)


@dataclass(frozen=True, eq=False)
class SelectionMask:
    """Binary column selection (the diagonal of the selection matrix)."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool).copy()
        if bits.ndim != 1:
            raise DomainError("mask must be one-dimensional")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_indices(cls, indices, q: int) -> "SelectionMask":
        bits = np.zeros(q, dtype=bool)
        idx = np.asarray(indices, dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= q):
            raise DomainError("index out of range")
        bits[idx] = True
        return cls(bits)

    @property
    def q_prime(self) -> int:
        return int(self.bits.sum())

    @property
    def q(self) -> int:
        return self.bits.size

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def selection_matrix(self) -> np.ndarray:
        """Q x Q' matrix with one 1 per column picking the selected directions."""
        idx = self.indices()
        G = np.zeros((self.q, idx.size))
        G[idx, np.arange(idx.size)] = 1.0
        return G

    def __eq__(self, other):
        return isinstance(other, SelectionMask) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    def __repr__(self):
        return f"SelectionMask(q={self.q}, q_prime={self.q_prime}, indices={self.indices().tolist()})"


@dataclass(frozen=True)
class InnerSolution:
    """Optimum of the inner problem at one lower bound."""

    mask: SelectionMask
    lambda_min: float
    lambda_max: float


@dataclass(frozen=True)
class TransitionRecord:
    index: int
    eta: float
    mask: SelectionMask
    lambda_min: float
    lambda_max: float
    kappa: float

    def to_dict(self):
        return {"index": self.index, "eta": self.eta, "lambda_min": self.lambda_min,
                "lambda_max": self.lambda_max, "kappa": self.kappa,
                "selected": self.mask.indices().tolist()}


@dataclass(frozen=True)
class TransitionTrace:
    """All transitions of one sweep and the best of them.

    ``termination`` is ``"bound"`` (eta reached the trace bound),
    ``"infeasible"`` (the inner problem had no solution) or ``"budget"``
    (``max_transitions`` reached). A sweep whose very first solve is
    infeasible has no records; ``best_mask`` is then None and ``kappa_star``
    infinite.
    """

    records: tuple[TransitionRecord, ...]
    termination: str
    upper_bound: float = math.inf
    note: str = ""

    @property
    def R(self) -> int:
        return len(self.records)

    @property
    def best(self) -> TransitionRecord | None:
        if not self.records:
            return None
        return min(self.records, key=lambda r: (r.kappa, r.index))

    @property
    def eta_star(self) -> float:
        b = self.best
        return math.nan if b is None else b.eta

    @property
    def kappa_star(self) -> float:
        b = self.best
        return math.inf if b is None else b.kappa

    @property
    def best_mask(self) -> SelectionMask | None:
        b = self.best
        return None if b is None else b.mask

    @property
    def feasible(self) -> bool:
        return bool(self.records)

    def to_dict(self):
        best = self.best
        return {
            "R": self.R,
            "eta_star": self.eta_star if best else None,
            "kappa_star": self.kappa_star if best else None,
            "selected": best.mask.indices().tolist() if best else None,
            "termination": self.termination,
            "upper_bound": self.upper_bound,
            "note": self.note,
            "records": [r.to_dict() for r in self.records],
        }


@dataclass(frozen=True, eq=False)
class HoopConstraintSet:
    """Per-hoop caps ``U @ mask <= caps``.

    ``hoop_of[q]`` is the hoop index of column ``q``; the membership matrix
    ``U`` is built from it on demand, so every column lies in exactly one
    hoop by construction.
    """

    hoop_of: np.ndarray
    caps: np.ndarray
    names: tuple = field(default=())

    def __post_init__(self):
        hoop_of = np.asarray(self.hoop_of, dtype=int).copy()
        caps = np.asarray(self.caps, dtype=int).copy()
        if hoop_of.ndim != 1 or caps.ndim != 1:
            raise DomainError("hoop_of and caps must be 1-d")
        if hoop_of.size and (hoop_of.min() < 0 or hoop_of.max() >= caps.size):
            raise DomainError("hoop index outside 0..J-1")
        if np.any(caps < 0):
            raise DomainError("caps must be non-negative")
        hoop_of.setflags(write=False)
        caps.setflags(write=False)
        object.__setattr__(self, "hoop_of", hoop_of)
        object.__setattr__(self, "caps", caps)

    @classmethod
    def from_membership(cls, U, caps) -> "HoopConstraintSet":
        U = np.asarray(U)
        if U.ndim != 2 or np.any(U.sum(axis=0) != 1) or not np.isin(U, (0, 1)).all():
            raise DomainError("membership must be binary with exactly one 1 per column")
        return cls(np.argmax(U, axis=0), caps)

    @property
    def J(self) -> int:
        return self.caps.size

    @property
    def Q(self) -> int:
        return self.hoop_of.size

    @property
    def membership(self) -> np.ndarray:
        U = np.zeros((self.J, self.Q), dtype=int)
        U[self.hoop_of, np.arange(self.Q)] = 1
        return U

    def counts(self, mask) -> np.ndarray:
        bits = mask.bits if isinstance(mask, SelectionMask) else np.asarray(mask, dtype=bool)
        return np.bincount(self.hoop_of[bits], minlength=self.J)

    def satisfied(self, mask) -> bool:
        return bool(np.all(self.counts(mask) <= self.caps))

    def subset(self, keep) -> "HoopConstraintSet":
        return HoopConstraintSet(self.hoop_of[np.asarray(keep)], self.caps, self.names)

    def to_dict(self):
        return {"membership": self.hoop_of.tolist(), "caps": self.caps.tolist()}

    @classmethod
    def from_dict(cls, d) -> "HoopConstraintSet":
        try:
            return cls(d["membership"], d["caps"])
        except KeyError as exc:
            raise DomainError(f"hoops JSON lacks {exc}") from None
