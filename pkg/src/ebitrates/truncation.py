"""Truncating measurements and the direct-exponent rate curve.

A truncation with threshold t keeps the Kraus operator f_t(rho) where
f_t(x) = sqrt(t/x) above the threshold and 1 below it, flattening the top of
the marginal spectrum.  Applying truncations on A and B together loses
little: see :func:`simultaneous_truncate` for the inequalities we check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .rates import RateCurve, bipartite_direct_rate
from .state import Distribution, MarginalSpectrum, PureTripartiteState, marginal, renyi_entropy

DEGENERATE_P = 1e-12
CHECK_TOL = 1e-9


def truncation_operator(marg: np.ndarray, t: float) -> np.ndarray:
    """f_t(marg) by functional calculus in the eigenbasis of marg."""
    if not t > 0:
        raise ValueError(f"threshold must be positive, got {t}")
    ev, vecs = np.linalg.eigh(marg)
    ev = np.clip(ev, 0.0, None)
    f = np.ones_like(ev)
    big = ev > t
    f[big] = np.sqrt(t / ev[big])
    return (vecs * f) @ vecs.conj().T


def _hinf(rho: np.ndarray) -> float:
    return renyi_entropy(MarginalSpectrum.from_density(rho), math.inf)


@dataclass(eq=False)
class TruncationOutcome:
    p_sA: float
    p_sB: float
    p_sAB: float
    postA: PureTripartiteState | None
    postB: PureTripartiteState | None
    postAB: PureTripartiteState | None
    hA: float
    hB: float
    hA_postA: float
    hB_postB: float
    degenerate: bool = False
    checks: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {
            "p_sA": self.p_sA, "p_sB": self.p_sB, "p_sAB": self.p_sAB,
            "hA": self.hA, "hB": self.hB,
            "hA_postA": self.hA_postA, "hB_postB": self.hB_postB,
            "degenerate": self.degenerate,
            "checks": {k: bool(v) for k, v in self.checks.items()},
        }


def _normalized(amps, p):
    if p < DEGENERATE_P:
        return None
    return PureTripartiteState.from_unnormalized(amps)


def local_contraction_check(M: np.ndarray, rho: np.ndarray, dims, tol: float = 1e-10) -> bool:
    """Tr_A (M x I) rho (M x I)^* <= Tr_A rho in the PSD order."""
    M = np.asarray(M)
    if np.linalg.norm(M, 2) > 1 + 1e-12:
        raise ValueError("M is not a contraction")
    dA, dB = dims
    r4 = np.asarray(rho).reshape(dA, dB, dA, dB)
    after = np.einsum("xa,abcd,yc->xbyd", M, r4, M.conj()).reshape(dA * dB, dA * dB)
    before_B = np.einsum("abad->bd", r4)
    after_B = np.einsum("abad->bd", after.reshape(dA, dB, dA, dB))
    gap = before_B - after_B
    return bool(np.linalg.eigvalsh(0.5 * (gap + gap.conj().T)).min() >= -tol)


def simultaneous_truncate(state: PureTripartiteState, tA: float, tB: float) -> TruncationOutcome:
    """Truncate A, B and both; record the probabilities and min-entropy inequalities."""
    psi = state.amplitudes
    MA = truncation_operator(marginal(state, "A"), tA)
    MB = truncation_operator(marginal(state, "B"), tB)
    vA = np.einsum("xa,abc->xbc", MA, psi)
    vB = np.einsum("yb,abc->ayc", MB, psi)
    vAB = np.einsum("yb,abc->ayc", MB, vA)
    pA, pB, pAB = (float(np.vdot(v, v).real) for v in (vA, vB, vAB))
    postA, postB, postAB = _normalized(vA, pA), _normalized(vB, pB), _normalized(vAB, pAB)
    checks = {"union": pAB >= pA + pB - 1 - CHECK_TOL}
    if postAB is None:
        return TruncationOutcome(pA, pB, pAB, postA, postB, None, 0.0, 0.0,
                                 _hinf(marginal(postA, "A")) if postA else 0.0,
                                 _hinf(marginal(postB, "B")) if postB else 0.0,
                                 degenerate=True, checks=checks)
    rA_AB, rB_AB = marginal(postAB, "A"), marginal(postAB, "B")
    rA_A, rB_B = marginal(postA, "A"), marginal(postB, "B")
    hA, hB = _hinf(rA_AB), _hinf(rB_AB)
    hA_A, hB_B = _hinf(rA_A), _hinf(rB_B)
    checks["minentropy_A"] = hA >= hA_A - math.log2(pA / pAB) - CHECK_TOL
    checks["minentropy_B"] = hB >= hB_B - math.log2(pB / pAB) - CHECK_TOL
    # marginal domination behind both min-entropy inequalities
    gA = (pA / pAB) * rA_A - rA_AB
    gB = (pB / pAB) * rB_B - rB_AB
    checks["domination_A"] = np.linalg.eigvalsh(gA).min() >= -CHECK_TOL
    checks["domination_B"] = np.linalg.eigvalsh(gB).min() >= -CHECK_TOL
    return TruncationOutcome(pA, pB, pAB, postA, postB, postAB, hA, hB, hA_A, hB_B,
                             checks={k: bool(v) for k, v in checks.items()})


def direct_exponent_curve(state: PureTripartiteState, r_grid) -> RateCurve:
    """r -> min{E_A(r), E_B(r)}; r = 0 gives the limit min{H(A), H(B)}."""
    specA, specB = state.spectrum("A"), state.spectrum("B")
    grid = np.asarray(r_grid, dtype=float)
    if np.any(grid < 0):
        raise ValueError("exponents must be nonnegative")
    vals = []
    for r in grid:
        if r == 0:
            vals.append(min(renyi_entropy(specA, 1), renyi_entropy(specB, 1)))
        else:
            vals.append(min(bipartite_direct_rate(specA, r), bipartite_direct_rate(specB, r)))
    return RateCurve(grid, np.array(vals), "direct")


# --- i.i.d. truncations via type classes ------------------------------------

def _compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def _log_multinomial(counts) -> float:
    counts = np.asarray(counts)
    return float(gammaln(counts.sum() + 1) - gammaln(counts + 1).sum())


@dataclass(frozen=True)
class IidSingle:
    p_s: float
    h_inf_post: float


def iid_single_truncation(spectrum, n: int, t: float) -> IidSingle:
    """Truncate the n-fold tensor power of a spectrum: success probability and post H_inf."""
    p = np.asarray(spectrum.probs if isinstance(spectrum, MarginalSpectrum) else spectrum, dtype=float)
    p = p[p > 0]
    logp = np.log2(p)
    p_s, top = 0.0, 0.0
    for c in _compositions(n, len(p)):
        lam = 2.0 ** float(np.dot(c, logp))
        kept = min(lam, t)
        p_s += 2.0 ** (_log_multinomial(c) / math.log(2)) * kept
        top = max(top, kept)
    return IidSingle(p_s, -math.log2(top / p_s) if p_s > 0 else 0.0)


def iid_quantile_threshold(spectrum, n: int, r: float) -> float:
    """Smallest t with 1 - p_s(t) <= 2^(-r n); p_s is piecewise linear, so bisect in log t."""
    target = 1.0 - 2.0 ** (-r * n)
    p = np.asarray(spectrum.probs if isinstance(spectrum, MarginalSpectrum) else spectrum, dtype=float)
    hi = float(np.max(p)) ** n
    lo = float(np.min(p[p > 0])) ** n * 1e-3
    if iid_single_truncation(p, n, lo).p_s >= target:
        return lo
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if iid_single_truncation(p, n, mid).p_s >= target:
            hi = mid
        else:
            lo = mid
        if hi / lo < 1 + 1e-12:
            break
    return hi


@dataclass(frozen=True)
class IidJoint:
    p_sA: float
    p_sB: float
    p_sAB: float
    hA: float
    hB: float


def iid_simultaneous_truncation(P: Distribution, n: int, tA: float, tB: float) -> IidJoint:
    """Exact simultaneous truncation of psi^(x)n for a free-support psi with measured P.

    Marginals are diagonal in the product basis, so every quantity depends on
    strings only through their joint type.
    """
    P = P.nonzero()
    labels = list(P.support)
    probs = np.asarray(P.probs)
    marg = [P.marginal(s) for s in (0, 1)]
    sym = [list(m.support) for m in marg]
    logm = [np.log2(m.probs) for m in marg]
    proj = [np.array([[1.0 if lab[s] == x else 0.0 for x in sym[s]] for lab in labels])
            for s in (0, 1)]
    logP = np.log2(probs)
    pA = pB = pAB = 0.0
    massA: dict = {}
    massB: dict = {}
    for c in _compositions(n, len(labels)):
        c = np.array(c)
        w = 2.0 ** (_log_multinomial(c) / math.log(2) + float(np.dot(c, logP)))
        cA, cB = c @ proj[0], c @ proj[1]
        lamA = 2.0 ** float(np.dot(cA, logm[0]))
        lamB = 2.0 ** float(np.dot(cB, logm[1]))
        fA, fB = min(1.0, tA / lamA), min(1.0, tB / lamB)
        pA += w * fA
        pB += w * fB
        pAB += w * fA * fB
        kA, kB = tuple(cA.astype(int)), tuple(cB.astype(int))
        massA[kA] = massA.get(kA, 0.0) + w * fA * fB
        massB[kB] = massB.get(kB, 0.0) + w * fA * fB
    # each A-string of a given type carries an equal share of its type's mass
    topA = max(v / 2.0 ** (_log_multinomial(k) / math.log(2)) for k, v in massA.items())
    topB = max(v / 2.0 ** (_log_multinomial(k) / math.log(2)) for k, v in massB.items())
    return IidJoint(pA, pB, pAB, -math.log2(topA / pAB), -math.log2(topB / pAB))


def quantile_schedule(spectrum, n: int, r: float) -> float:
    return iid_quantile_threshold(spectrum, n, r)


def exponent_schedule(spectrum, n: int, r: float, delta: float = 0.05) -> float:
    """t = 2^(-n(E(r) - delta)) with E the bipartite direct exponent."""
    return 2.0 ** (-n * (bipartite_direct_rate(spectrum, r) - delta))


@dataclass(frozen=True)
class SweepRow:
    n: int
    tA: float
    tB: float
    outcome: IidJoint

    @property
    def failure_exponent(self) -> float:
        fail = 1.0 - self.outcome.p_sAB
        return math.inf if fail <= 0 else -math.log2(fail) / self.n


def iid_protocol_sweep(P: Distribution, ns, r: float, schedule=quantile_schedule) -> list[SweepRow]:
    """Simultaneous truncation of psi^(x)n for each n, thresholds from ``schedule``."""
    P = P.nonzero()
    specA = MarginalSpectrum(np.sort(P.marginal(0).probs)[::-1])
    specB = MarginalSpectrum(np.sort(P.marginal(1).probs)[::-1])
    rows = []
    for n in ns:
        tA, tB = schedule(specA, n, r), schedule(specB, n, r)
        rows.append(SweepRow(n, tA, tB, iid_simultaneous_truncation(P, n, tA, tB)))
    return rows
