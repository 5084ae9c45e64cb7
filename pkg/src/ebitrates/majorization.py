"""Majorization predicates and ball-majorization over normalized partition triples."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .state import MarginalSpectrum, renyi_entropy

TOL = 1e-10


def _sorted_padded(*seqs):
    arrs = [np.sort(np.asarray(s, dtype=float).ravel())[::-1] for s in seqs]
    n = max(len(a) for a in arrs)
    return [np.concatenate([a, np.zeros(n - len(a))]) for a in arrs]


def majorizes(x, y, tol: float = TOL) -> bool:
    """True iff x majorizes y (x is 'more ordered'), i.e. y <= x in dominance order."""
    xs, ys = _sorted_padded(x, y)
    cx, cy = np.cumsum(xs), np.cumsum(ys)
    if abs(cx[-1] - cy[-1]) > tol:
        return False
    return bool(np.all(cx >= cy - tol))


def nielsen_transformable(source: MarginalSpectrum, target: MarginalSpectrum) -> bool:
    """Deterministic LOCC source -> target iff target's spectrum majorizes source's."""
    return majorizes(_probs(target), _probs(source))


def _probs(s):
    return s.probs if isinstance(s, MarginalSpectrum) else np.asarray(s, dtype=float)


def max_epr_extractable(spectrum) -> int:
    return int(math.floor(renyi_entropy(_probs(spectrum), math.inf) + 1e-12))


@dataclass(frozen=True)
class PartitionTriple:
    lamA: tuple
    lamB: tuple
    lamC: tuple

    def __post_init__(self):
        parts = []
        for lam in (self.lamA, self.lamB, self.lamC):
            lam = tuple(int(v) for v in lam)
            if any(v < 0 for v in lam) or any(a < b for a, b in zip(lam, lam[1:])):
                raise ValueError(f"{lam} is not a partition")
            while lam and lam[-1] == 0:
                lam = lam[:-1]
            parts.append(lam)
        if len({sum(p) for p in parts}) != 1:
            raise ValueError(f"partitions have different weights: {parts}")
        for name, lam in zip(("lamA", "lamB", "lamC"), parts):
            object.__setattr__(self, name, lam)

    @property
    def n(self) -> int:
        return sum(self.lamA)

    def __iter__(self):
        return iter((self.lamA, self.lamB, self.lamC))

    def normalized(self) -> "NormalizedTriple":
        n = self.n
        return NormalizedTriple(*(np.array(lam, dtype=float) / n for lam in self))


@dataclass(frozen=True, eq=False)
class NormalizedTriple:
    barA: np.ndarray
    barB: np.ndarray
    barC: np.ndarray

    def __post_init__(self):
        for name in ("barA", "barB", "barC"):
            v = np.asarray(getattr(self, name), dtype=float).ravel()
            if len(v) == 0:
                v = np.array([1.0])
            if np.any(v < -TOL) or abs(v.sum() - 1.0) > TOL:
                raise ValueError(f"{name} is not a probability vector: {v}")
            if np.any(np.diff(v) > TOL):
                raise ValueError(f"{name} is not sorted nonincreasing: {v}")
            v = np.clip(v, 0.0, None)
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def from_unsorted(cls, a, b, c) -> "NormalizedTriple":
        return cls(*(np.sort(np.asarray(v, dtype=float))[::-1] / np.sum(v) for v in (a, b, c)))

    def __iter__(self):
        return iter((self.barA, self.barB, self.barC))

    def distance(self, other: "NormalizedTriple") -> float:
        """Max over subsystems of the l1 distance."""
        return max(float(np.abs(x - y).sum()) for x, y in
                   (_sorted_padded(u, v) for u, v in zip(self, other)))


def ball_extreme(center, eps: float) -> np.ndarray:
    """Greedy maximal element of the closed l1 eps-ball around a sorted vector.

    Moves eps/2 of mass onto the first coordinate, taking it from the tail.
    Its partial sums are min(1, S_k(center) + eps/2), the largest possible.
    """
    c = np.sort(np.asarray(center, dtype=float))[::-1].copy()
    move = min(eps / 2.0, 1.0 - c[0])
    c[0] += move
    for k in range(len(c) - 1, 0, -1):
        if move <= 0:
            break
        take = min(move, c[k])
        c[k] -= take
        move -= take
    return c


def majorized_by_ball(mu, center, eps: float, tol: float = TOL) -> bool:
    """Does some sorted probability vector within l1 distance eps of center majorize mu?"""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    mu_s, c_s = _sorted_padded(mu, center)
    if math.isinf(eps):
        return True
    bound = np.minimum(1.0, np.cumsum(c_s) + eps / 2.0)
    return bool(np.all(np.cumsum(mu_s) <= bound + tol))


def triple_majorized_by_ball(mu: NormalizedTriple, center: NormalizedTriple, eps: float) -> bool:
    return all(majorized_by_ball(m, c, eps) for m, c in zip(mu, center))
