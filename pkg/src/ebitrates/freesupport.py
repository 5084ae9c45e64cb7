"""Free-support detection and the exact strong-converse rate for free-support states.

For free support the rate at exponent r is the value of

    max { min(H(Q_A), H(Q_B)) : D(Q||P) <= r }

over distributions Q on the support of the measured distribution P.  We
solve it through its Lagrangian: for a weight x and multiplier t the inner
problem max_Q x H(Q_A) + (1-x) H(Q_B) - t D(Q||P) is strictly concave; t is
tuned so the divergence constraint is tight, and x so that the two marginal
entropies agree (or an endpoint x in {0, 1} is optimal).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import _backend
from .rates import RateCurve
from .state import Distribution, PureTripartiteState, ZERO_TOL

LN2 = math.log(2.0)
AMP_THRESHOLD = 1e-12
T_MIN = 1e-10
T_MAX = 1e8


class NotFreeSupport(Exception):
    """Raised by operations that need free support when the state lacks it."""


@dataclass(frozen=True)
class FreeSupportRefusal:
    reason: str
    witness: tuple = ()

    def __bool__(self):
        return False


@dataclass(frozen=True, eq=False)
class FreeSupportCertificate:
    basisA: np.ndarray
    basisB: np.ndarray
    basisC: np.ndarray
    support: tuple
    measured: Distribution

    def to_json(self) -> dict:
        return {
            "support": [list(s) for s in self.support],
            "probs": [float(p) for p in self.measured.probs],
        }


def _is_free(support) -> tuple:
    """Empty tuple if free, otherwise a pair of triples differing in one position."""
    for keep in ((0, 1), (0, 2), (1, 2)):
        seen = {}
        for s in support:
            key = (s[keep[0]], s[keep[1]])
            if key in seen:
                return (seen[key], s)
            seen[key] = s
    return ()


def detect_free_support(state: PureTripartiteState, bases=None):
    """Certificate when the support in the given local bases is free, refusal otherwise."""
    dims = state.dims
    if bases is None:
        bases = tuple(np.eye(d) for d in dims)
    bases = tuple(np.asarray(U, dtype=complex) for U in bases)
    for U, d in zip(bases, dims):
        if U.shape != (d, d) or not np.allclose(U.conj().T @ U, np.eye(d), atol=1e-10):
            raise ValueError("bases must be unitary matrices matching the local dimensions")
    UA, UB, UC = bases
    amps = np.einsum("abc,aA,bB,cC->ABC", state.amplitudes, UA.conj(), UB.conj(), UC.conj())
    nz = np.argwhere(np.abs(amps) > AMP_THRESHOLD)
    support = tuple(tuple(int(i) for i in idx) for idx in nz)
    witness = _is_free(support)
    if witness:
        return FreeSupportRefusal("two support triples differ in only one position", witness)
    probs = np.array([abs(amps[s]) ** 2 for s in support])
    return FreeSupportCertificate(UA, UB, UC, support, Distribution.from_probs(probs, support))


@dataclass(frozen=True, eq=False)
class KlBallSolution:
    Q: Distribution
    value: float
    x_weight: float
    multiplier: float
    kl: float
    entropies: tuple = field(default=(0.0, 0.0))

    def to_json(self) -> dict:
        return {
            "Q": [{"label": list(lab), "q": float(q)} for lab, q in zip(self.Q.support, self.Q.probs)],
            "value": self.value,
            "x_weight": self.x_weight,
            "multiplier": self.multiplier,
            "kl": self.kl,
            "H_A": self.entropies[0],
            "H_B": self.entropies[1],
        }


def _eg_ascent(q, logp, idx, nlab, w, t, iters=20000, tol=1e-11):
    """Exponentiated-gradient fallback with step halving."""
    from ._fallback import _gradient, _objective

    F = _objective(q, logp, idx, nlab, w, t)
    eta = 1.0
    for _ in range(iters):
        g = _gradient(q, logp, idx, nlab, w, t)
        dev = g - np.dot(q, g)
        if np.max(q * np.abs(dev)) < tol:
            break
        while eta > 1e-12:
            qn = q * np.exp(eta * np.clip(dev, -50, 50))
            qn /= qn.sum()
            Fn = _objective(qn, logp, idx, nlab, w, t)
            if Fn >= F:
                q, F = qn, Fn
                eta = min(2 * eta, 1e3)
                break
            eta *= 0.5
        else:
            break
    return q


class EntropyProgram:
    """Weighted marginal-entropy programs over the simplex on supp P."""

    def __init__(self, P: Distribution):
        P = P.nonzero()
        if not all(isinstance(lab, tuple) and len(lab) == 3 for lab in P.support):
            raise ValueError("distribution labels must be (a, b, c) triples")
        self.P = P
        self.p = np.asarray(P.probs, dtype=float)
        self.logp = np.log(self.p)
        idx, nlab = [], []
        for s in range(3):
            values = sorted({lab[s] for lab in P.support})
            pos = {v: i for i, v in enumerate(values)}
            idx.append([pos[lab[s]] for lab in P.support])
            nlab.append(len(values))
        self.idx = np.array(idx, dtype=np.int64)
        self.nlab = np.array(nlab, dtype=np.int64)

    @property
    def size(self) -> int:
        return len(self.p)

    def maximize(self, w, t: float, q0=None) -> np.ndarray:
        """argmax_q sum_s w_s H(q_s) - t D(q||p)."""
        if self.size == 1:
            return np.ones(1)
        w = np.asarray(w, dtype=float)
        q0 = self.p if q0 is None else np.maximum(q0, 1e-300)
        q, _, ok = _backend.entropy_newton(q0, self.logp, self.idx, self.nlab, w, float(t))
        if not ok:
            q = _eg_ascent(np.asarray(q), self.logp, self.idx, self.nlab, w, float(t))
            q, _, _ = _backend.entropy_newton(q, self.logp, self.idx, self.nlab, w, float(t))
        return np.asarray(q)

    def marginal_entropies(self, q) -> np.ndarray:
        out = np.zeros(3)
        for s in range(3):
            m = np.bincount(self.idx[s], weights=q, minlength=self.nlab[s])
            m = m[m > ZERO_TOL]
            out[s] = -float(np.dot(m, np.log2(m)))
        return out

    def kl(self, q) -> float:
        on = q > 0
        return max(0.0, float(np.dot(q[on], np.log2(q[on]) - self.logp[on] / LN2)))

    def weighted_value(self, w, t, q) -> float:
        """Objective in bits at q."""
        return float(np.dot(w, self.marginal_entropies(q)) - t * self.kl(q))


class _MinMaxSolver:
    def __init__(self, P: Distribution):
        self.prog = EntropyProgram(P)
        self._t = 1.0
        self._q = None

    def at_x(self, x: float, r: float):
        """Q maximizing x H_A + (1-x) H_B on the divergence ball; returns (q, t)."""
        prog = self.prog
        w = (x, 1.0 - x, 0.0)
        q_free = prog.maximize(w, T_MIN, self._q)
        if prog.kl(q_free) <= r:
            self._q = q_free
            return q_free, 0.0
        state = {"q": self._q if self._q is not None else prog.p}
        # the objective is nearly flat at T_MIN, so reuse the solve we already have
        seen = {math.log(T_MIN): (prog.kl(q_free) - r, q_free)}

        def excess(s):
            # memoized: warm starts make repeated solves differ at the 1e-13 level
            if s not in seen:
                q = prog.maximize(w, math.exp(s), state["q"])
                state["q"] = q
                seen[s] = (prog.kl(q) - r, q)
            return seen[s][0]

        lo = math.log(T_MIN)
        hi = math.log(min(max(self._t, 1e-6), T_MAX))
        if excess(hi) > 0:
            while True:
                lo = hi
                hi += math.log(10.0)
                if hi > math.log(T_MAX) or excess(hi) <= 0:
                    break
        else:
            # tighten the lower end from the warm start
            while hi - math.log(10.0) > lo:
                cand = hi - math.log(10.0)
                if excess(cand) > 0:
                    lo = cand
                    break
                hi = cand
        if hi > math.log(T_MAX):
            q = prog.maximize(w, T_MAX, prog.p)
            return q, T_MAX
        if excess(hi) == 0.0:
            s = hi
        elif excess(lo) <= 0.0:
            s = lo
        else:
            s = brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=200)
        t = math.exp(s)
        excess(s)
        q = seen[s][1]
        self._t, self._q = t, q
        return q, t

    def solve(self, r: float) -> KlBallSolution:
        prog = self.prog
        if prog.size == 1 or r == 0:
            return self._package(prog.p, 0.5, T_MAX if prog.size > 1 else 0.0)

        cache = {}

        def gap(x):
            q, t = self.at_x(x, r)
            cache[x] = (q, t)
            h = prog.marginal_entropies(q)
            return h[0] - h[1]

        if gap(0.0) >= 0:
            x = 0.0
        elif gap(1.0) <= 0:
            x = 1.0
        else:
            x = brentq(gap, 0.0, 1.0, xtol=1e-13, rtol=1e-13, maxiter=200)
            if x not in cache:
                gap(x)
        q, t = cache[x]
        q = self._feasible(q, r)
        return self._package(q, x, t)

    def _feasible(self, q, r):
        """Mix toward P until the divergence constraint holds exactly."""
        prog = self.prog
        if prog.kl(q) <= r:
            return q
        lo, hi = 0.0, 1.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if prog.kl((1 - mid) * q + mid * prog.p) <= r:
                hi = mid
            else:
                lo = mid
        return (1 - hi) * q + hi * prog.p

    def _package(self, q, x, t) -> KlBallSolution:
        prog = self.prog
        h = prog.marginal_entropies(q)
        return KlBallSolution(
            Q=Distribution.from_probs(q, prog.P.support),
            value=float(min(h[0], h[1])),
            x_weight=float(x),
            multiplier=float(t),
            kl=prog.kl(q),
            entropies=(float(h[0]), float(h[1])),
        )


def kl_ball_minmax_entropy(P: Distribution, r: float) -> KlBallSolution:
    """max over D(Q||P) <= r of min{H(Q_A), H(Q_B)} (bits)."""
    if r < 0 or math.isnan(r):
        raise ValueError(f"r must be nonnegative, got {r}")
    return _MinMaxSolver(P).solve(r)


def saturation(P: Distribution) -> KlBallSolution:
    """Unconstrained optimum; its divergence is the saturation exponent."""
    return _MinMaxSolver(P).solve(math.inf)


def h_alpha_theta(P: Distribution, alpha: float, theta) -> float:
    """max_Q sum_s theta_s H(Q_s) - alpha/(1-alpha) D(Q||P), in bits."""
    if not 0 <= alpha < 1:
        raise ValueError(f"alpha must lie in [0,1), got {alpha}")
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (3,) or np.any(theta < 0) or abs(theta.sum() - 1) > 1e-12:
        raise ValueError(f"theta must be a distribution on (A,B,C), got {theta}")
    prog = EntropyProgram(P)
    if prog.size == 1:
        return 0.0
    t = alpha / (1 - alpha)
    q = prog.maximize(theta, t)
    return prog.weighted_value(theta, t, q)


def lagrangian_upper_bound(P: Distribution, r: float, x_grid=None) -> float:
    """min over x and t >= 0 of max_Q [x H_A + (1-x) H_B - t (D(Q||P) - r)]."""
    prog = EntropyProgram(P)
    if x_grid is None:
        x_grid = np.linspace(0.0, 1.0, 101)
    best = math.inf
    for x in x_grid:
        w = np.array([x, 1 - x, 0.0])

        def dual(s):
            t = math.exp(s)
            q = prog.maximize(w, t)
            return prog.weighted_value(w, t, q) + t * r

        res = minimize_scalar(dual, bounds=(math.log(T_MIN), math.log(1e4)), method="bounded",
                              options={"xatol": 1e-9})
        best = min(best, res.fun, dual(math.log(T_MIN)))
    return float(best)


def sc_rate_curve_free(state: PureTripartiteState, r_grid, bases=None) -> RateCurve:
    """Exact strong-converse rate curve r -> R*(psi -> EPR_AB, r) for free support."""
    cert = detect_free_support(state, bases)
    if not cert:
        raise NotFreeSupport(cert.reason)
    grid = np.asarray(r_grid, dtype=float)
    if np.any(grid < 0):
        raise ValueError("exponents must be nonnegative")
    solver = _MinMaxSolver(cert.measured)
    sat = solver.solve(math.inf)
    values = np.empty(len(grid))
    for k in np.argsort(grid):
        r = grid[k]
        if r >= sat.kl:
            values[k] = sat.value
        else:
            values[k] = min(solver.solve(r).value, sat.value)
    return RateCurve(grid, values, "strong-converse")
