"""Bipartite rate curves and one-shot fidelity/probability conversions.

Curves map an exponent r (bits per copy) to a rate R (ebits per copy).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .state import MarginalSpectrum, ZERO_TOL, renyi_entropy

KINDS = ("direct", "strong-converse", "strong-converse-fidelity")

SLOPE_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class RateCurve:
    grid: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).copy()
        values = np.asarray(self.values, dtype=float).copy()
        if self.kind not in KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if grid.ndim != 1 or grid.shape != values.shape or len(grid) == 0:
            raise ValueError("grid and values must be equal-length 1-D arrays")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if grid[0] < 0:
            raise ValueError("exponents must be nonnegative")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.grid)

    def __call__(self, r):
        return np.interp(r, self.grid, self.values)

    def is_monotone(self, tol: float = 1e-9) -> bool:
        diffs = np.diff(self.values)
        if self.kind == "direct":
            return bool(np.all(diffs <= tol))
        return bool(np.all(diffs >= -tol))

    def is_concave(self, tol: float = 1e-8) -> bool:
        """Discrete concavity: secant slopes never increase."""
        if len(self) < 3:
            return True
        slopes = np.diff(self.values) / np.diff(self.grid)
        return bool(np.all(np.diff(slopes) <= tol / np.diff(self.grid)[1:].min()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,R\n")
        for r, v in zip(self.grid, self.values):
            buf.write(f"{r:.12g},{v:.12g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: str) -> "RateCurve":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if lines[0].replace(" ", "") != "r,R":
            raise ValueError("curve CSV must start with header 'r,R'")
        rows = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
        return cls(rows[:, 0], rows[:, 1], kind)


def _spectrum(P) -> np.ndarray:
    p = P.probs if isinstance(P, MarginalSpectrum) else np.asarray(P, dtype=float)
    p = np.sort(p[p > ZERO_TOL])[::-1]
    return p / p.sum()


def _renyi_many(p: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """H_alpha(p) in bits for an array of finite alphas, none equal to 1."""
    lp = np.log(p)
    lmax = lp[0]
    s = np.log(np.exp(np.outer(alphas, lp - lmax)).sum(axis=1)) + alphas * lmax
    near = np.abs(alphas - 1.0) < 0.5
    if np.any(near):
        a = alphas[near]
        s[near] = np.log1p((p * np.expm1(np.outer(a - 1.0, lp))).sum(axis=1))
    return s / ((1.0 - alphas) * math.log(2))


def _maximize_on_grid(f, grid, lo, hi, vals=None):
    """Best grid point refined by bounded Brent search on its neighbours."""
    if vals is None:
        vals = np.array([f(x) for x in grid])
    k = int(np.argmax(vals))
    a = grid[max(k - 1, 0)] if k > 0 else lo
    b = grid[min(k + 1, len(grid) - 1)] if k < len(grid) - 1 else hi
    best_x, best = grid[k], vals[k]
    if b > a:
        res = minimize_scalar(lambda x: -f(x), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun > best:
            best_x, best = res.x, -res.fun
    return best_x, best


def direct_plateau_start(P) -> float:
    """Smallest r from which the direct rate equals H_inf(P) exactly."""
    p = _spectrum(P)
    k = int(np.sum(p >= p[0] * (1 - 1e-12)))
    return max(0.0, -math.log2(p[0]) - math.log2(k))


def bipartite_direct_rate(P, r: float) -> float:
    """sup over alpha > 1 of r/(1-alpha) + H_alpha(P), searched in u = 1/alpha."""
    if not r > 0:
        raise ValueError(f"direct rate needs r > 0, got {r}")
    p = _spectrum(P)
    h_inf = -math.log2(p[0])
    # eigenvalues carry rounding, so r = H_inf(P) computed elsewhere may land an ulp short
    if len(p) == 1 or r >= direct_plateau_start(p) - 1e-12:
        return h_inf

    def f(u):
        if u <= 0:
            return h_inf
        return renyi_entropy(p, 1.0 / u) - r * u / (1.0 - u)

    grid = np.concatenate([np.linspace(0.0, 0.99, 100), 1 - np.geomspace(1e-2, 1e-7, 20)])
    inner = grid[1:]
    vals = np.concatenate([[h_inf], _renyi_many(p, 1.0 / inner) - r * inner / (1.0 - inner)])
    _, best = _maximize_on_grid(f, grid, 0.0, 1.0 - 1e-9, vals)
    return float(min(max(best, h_inf), renyi_entropy(p, 1.0)))


def bipartite_sc_rate(P, r: float) -> float:
    """inf over alpha in [0,1) of r alpha/(1-alpha) + H_alpha(P), searched in u = alpha/(1-alpha)."""
    if r < 0:
        raise ValueError(f"strong-converse rate needs r >= 0, got {r}")
    p = _spectrum(P)
    h0 = math.log2(len(p))
    h1 = renyi_entropy(p, 1.0)
    if len(p) == 1 or r == 0:
        return h1 if r == 0 else h0

    def g(u):
        return r * u + renyi_entropy(p, u / (1.0 + u))

    grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 241)])
    inner = grid[1:]
    vals = -np.concatenate([[h0], r * inner + _renyi_many(p, inner / (1.0 + inner))])
    _, best = _maximize_on_grid(lambda u: -g(u), grid, 0.0, 1e6, vals)
    return float(min(max(-best, h1), h0))


def sc_slope_one_point(P, step: float = SLOPE_STEP) -> float:
    """Exponent r_0 where the secant slope of R* drops to 1 (bisection)."""
    p = _spectrum(P)

    def slope(x):
        return (bipartite_sc_rate(p, x + step) - bipartite_sc_rate(p, x)) / step

    if len(p) == 1 or slope(0.0) <= 1.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while slope(hi) > 1.0:
        lo, hi = hi, 2 * hi
        if hi > 1e4:
            raise RuntimeError("slope of the strong-converse curve never reaches 1")
    while hi - lo > step:
        mid = 0.5 * (lo + hi)
        if slope(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bipartite_sc_fidelity_rate(P, r: float, r0: float | None = None) -> float:
    """R* below r_0, unit slope above it."""
    if not r > 0:
        raise ValueError(f"fidelity strong-converse rate needs r > 0, got {r}")
    if r0 is None:
        r0 = sc_slope_one_point(P)
    if r <= r0:
        return bipartite_sc_rate(P, r)
    return bipartite_sc_rate(P, r0) + r - r0


def sc_fidelity_from_probability(curve: RateCurve, r: float) -> float:
    """sup over sampled x <= r of R*(x) + r - x."""
    if curve.kind != "strong-converse":
        raise ValueError("transform needs a strong-converse curve")
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    if r < curve.grid[0]:
        raise ValueError(f"r={r} lies below the curve's grid")
    mask = curve.grid <= r
    cands = curve.values[mask] + r - curve.grid[mask]
    best = float(cands.max())
    if r <= curve.grid[-1]:
        best = max(best, float(curve(r)))
    return best


def curve_from_function(func, grid, kind: str) -> RateCurve:
    grid = np.asarray(grid, dtype=float)
    return RateCurve(grid, np.array([func(r) for r in grid]), kind)


class FidToProb(NamedTuple):
    L: int
    p: float

    @property
    def degenerate(self) -> bool:
        return self.L == 0


def oneshot_fid_to_prob(d: int, epsilon: float) -> FidToProb:
    """Fidelity 1-eps on d-dim max. entangled -> L-dim with probability p."""
    if d < 1:
        raise ValueError("d must be positive")
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0,1)")
    return FidToProb(d // 8, max(0.0, 1.0 - 30.0 * epsilon))


def oneshot_prob_to_fid(d: int, p: float, L: int) -> float:
    if d < 1 or L < d:
        raise ValueError(f"need L >= d >= 1, got d={d}, L={L}")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0,1]")
    return 1.0 - p * d / L


class LowFidBound(NamedTuple):
    bound: float
    vacuous: bool


def oneshot_lowfid_bound(d: int, epsilon: float) -> LowFidBound:
    """Lower bound on sqrt(p L) from a fidelity-(1-eps) d-dim target."""
    if d < 2:
        raise ValueError("d must be at least 2")
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0,1]")
    b = (math.sqrt(d * (1.0 - epsilon)) - 1.0) / math.log(d)
    return LowFidBound(b, b <= 0)
