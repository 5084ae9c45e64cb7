"""Exact small-n Schur-Weyl data for tensor powers of tripartite states.

Young projectors are built as dense matrices on (C^d)^(x)n by summing
character-weighted copy permutations, which is fine for n <= 6 and d <= 4.
Weights w_lambda = ||(P_lA x P_lB x P_lC) psi^(x)n||^2 drive every estimator
here: downset weights, finite-n rate-function estimates, the general
strong-converse lower bound and the M_n sandwich for E^{alpha,theta}.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations

import numpy as np

from ._backend import permutation_accumulate
from .freesupport import FreeSupportCertificate, h_alpha_theta
from .majorization import NormalizedTriple, PartitionTriple, triple_majorized_by_ball
from .state import PureTripartiteState, shannon_entropy

N_MAX = 6
HARD_N_MAX = 8
MAX_LOCAL_DIM = 4
AMPLITUDE_BUDGET = int(os.environ.get("EBITRATES_MAX_AMPLITUDES", 2 ** 22))


class BudgetExceeded(RuntimeError):
    pass


def partitions(n: int, max_rows: int | None = None) -> list[tuple[int, ...]]:
    """Partitions of n in reverse lexicographic order, optionally with at most max_rows parts."""
    out = []

    def rec(rest, cap, prefix):
        if rest == 0:
            out.append(tuple(prefix))
            return
        if max_rows is not None and len(prefix) == max_rows:
            return
        for part in range(min(rest, cap), 0, -1):
            rec(rest - part, part, prefix + [part])

    rec(n, n, [])
    return out


def hook_dimension(lam) -> int:
    """dim[lambda], the S_n irrep dimension, by the hook length formula."""
    lam = tuple(lam)
    n = sum(lam)
    conj = [sum(1 for row in lam if row > j) for j in range(lam[0])] if lam else []
    hooks = 1
    for i, row in enumerate(lam):
        for j in range(row):
            hooks *= (row - j - 1) + (conj[j] - i - 1) + 1
    return math.factorial(n) // hooks


def weyl_dimension(lam, d: int) -> int:
    """dim of the Schur module S_lambda(C^d); zero if lambda has more than d rows."""
    lam = tuple(lam)
    if len(lam) > d:
        return 0
    ext = list(lam) + [0] * (d - len(lam))
    num, den = 1, 1
    for i in range(d):
        for j in range(i + 1, d):
            num *= ext[i] - ext[j] + j - i
            den *= j - i
    return num // den


@lru_cache(maxsize=None)
def character(lam: tuple, cycle_type: tuple) -> int:
    """chi^lambda on the class with the given cycle type (Murnaghan-Nakayama)."""
    if not cycle_type:
        return 1 if sum(lam) == 0 else 0
    r, rest = cycle_type[0], cycle_type[1:]
    k = len(lam)
    beta = [lam[i] + (k - 1 - i) for i in range(k)]
    bset = set(beta)
    total = 0
    for b in beta:
        nb = b - r
        if nb < 0 or nb in bset:
            continue
        sign = (-1) ** sum(1 for c in beta if nb < c < b)
        new = sorted((nb if c == b else c for c in beta), reverse=True)
        kk = len(new)
        mu = tuple(x for x in (new[i] - (kk - 1 - i) for i in range(kk)) if x > 0)
        total += sign * character(mu, rest)
    return total


def cycle_type(perm) -> tuple[int, ...]:
    seen = [False] * len(perm)
    lengths = []
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        lengths.append(length)
    return tuple(sorted(lengths, reverse=True))


@dataclass(frozen=True)
class YoungData:
    partition: tuple
    dim_symmetric: int
    character_table_row: dict = field(compare=False, hash=False)

    @classmethod
    def of(cls, lam) -> "YoungData":
        lam = tuple(int(x) for x in lam if x > 0)
        if any(a < b for a, b in zip(lam, lam[1:])):
            raise ValueError(f"{lam} is not a partition")
        n = sum(lam)
        row = {mu: character(lam, mu) for mu in partitions(n)}
        return cls(lam, hook_dimension(lam), row)

    @property
    def n(self) -> int:
        return sum(self.partition)


@lru_cache(maxsize=None)
def _perm_table(n: int, d: int) -> tuple[np.ndarray, tuple]:
    grid = np.arange(d ** n).reshape((d,) * n) if n else np.arange(1)
    perms = list(permutations(range(n)))
    idx = np.stack([grid.transpose(p).ravel() for p in perms])
    return idx, tuple(cycle_type(p) for p in perms)


@lru_cache(maxsize=None)
def projector_matrix(lam: tuple, d: int) -> np.ndarray:
    """P_lambda on (C^d)^(x)n as a dense real matrix."""
    lam = tuple(lam)
    n = sum(lam)
    if n > HARD_N_MAX:
        raise BudgetExceeded(f"n = {n} exceeds the hard cap {HARD_N_MAX}")
    if d ** n > AMPLITUDE_BUDGET:
        raise BudgetExceeded(f"local space of dimension {d ** n} exceeds the budget")
    if len(lam) > d:
        return np.zeros((d ** n, d ** n))
    idx, ctypes = _perm_table(n, d)
    coeffs = np.array([character(lam, c) for c in ctypes], dtype=float)
    coeffs *= hook_dimension(lam) / math.factorial(n)
    out = permutation_accumulate(idx, coeffs)
    out.setflags(write=False)
    return out


_AXES = {"A": 0, "B": 1, "C": 2}


def young_projector_apply(vec: np.ndarray, partition, which_factor: str) -> np.ndarray:
    """Apply P_lambda to the copies of one party in a tensor of shape (dA^n, dB^n, dC^n)."""
    yd = partition if isinstance(partition, YoungData) else YoungData.of(partition)
    vec = np.asarray(vec)
    axis = _AXES[which_factor]
    D = vec.shape[axis]
    n = yd.n
    d = round(D ** (1.0 / n)) if n else 1
    if d ** n != D:
        raise ValueError(f"axis of size {D} is not a {n}-fold power")
    if d > MAX_LOCAL_DIM:
        raise BudgetExceeded(f"local dimension {d} exceeds {MAX_LOCAL_DIM}")
    P = projector_matrix(yd.partition, d)
    return np.moveaxis(np.tensordot(P, vec, axes=([1], [axis])), 0, axis)


def _check_budget(state: PureTripartiteState, n: int, n_max: int):
    if n < 1:
        raise ValueError("n must be positive")
    if n > min(n_max, HARD_N_MAX):
        raise BudgetExceeded(f"n = {n} exceeds n_max = {min(n_max, HARD_N_MAX)}")
    if max(state.dims) > MAX_LOCAL_DIM:
        raise BudgetExceeded(f"local dimension above {MAX_LOCAL_DIM}")
    size = int(np.prod(state.dims)) ** n
    if size > AMPLITUDE_BUDGET:
        raise BudgetExceeded(f"{size} amplitudes exceed the budget of {AMPLITUDE_BUDGET}")


@dataclass(frozen=True)
class SpectrumTable:
    n: int
    entries: dict

    def weight(self, triple) -> float:
        key = triple if isinstance(triple, PartitionTriple) else PartitionTriple(*triple)
        return self.entries.get(key, 0.0)

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def positive(self):
        return [(k, w) for k, w in self.entries.items() if w > 0]

    def to_json(self) -> dict:
        return {"n": self.n, "entries": [
            {"lamA": list(k.lamA), "lamB": list(k.lamB), "lamC": list(k.lamC), "w": w}
            for k, w in self.entries.items()]}

    @classmethod
    def from_json(cls, payload) -> "SpectrumTable":
        if isinstance(payload, str):
            payload = json.loads(payload)
        entries = {PartitionTriple(tuple(e["lamA"]), tuple(e["lamB"]), tuple(e["lamC"])): float(e["w"])
                   for e in payload["entries"]}
        return cls(int(payload["n"]), entries)


_TABLE_CACHE: dict = {}


def spectrum_table(state: PureTripartiteState, n: int, n_max: int = N_MAX) -> SpectrumTable:
    """w_lambda = ||P_lambda psi^(x)n||^2 for every admissible triple."""
    _check_budget(state, n, n_max)
    key = (state.amplitudes.tobytes(), state.dims, n)
    if key in _TABLE_CACHE:
        return _TABLE_CACHE[key]
    dA, dB, dC = state.dims
    psi = state.tensor_power(n).amplitudes
    if np.allclose(psi.imag, 0):
        psi = psi.real
    parts = [partitions(n, d) for d in (dA, dB, dC)]
    PA = {la: projector_matrix(la, dA) for la in parts[0]}
    PB = {lb: projector_matrix(lb, dB) for lb in parts[1]}
    PC = {lc: projector_matrix(lc, dC) for lc in parts[2]}
    left = {la: np.tensordot(P, psi, axes=([1], [0])) for la, P in PA.items()}
    entries = {}
    for lc, Pc in PC.items():
        psi_c = np.tensordot(psi, Pc, axes=([2], [1]))
        for lb, Pb in PB.items():
            right = np.moveaxis(np.tensordot(Pb, psi_c, axes=([1], [1])), 0, 1)
            for la, L in left.items():
                # projectors on different parties commute and are Hermitian
                w = float(np.vdot(L, right).real)
                entries[PartitionTriple(la, lb, lc)] = 0.0 if w < 1e-10 else min(w, 1.0)
    table = SpectrumTable(n, entries)
    _TABLE_CACHE[key] = table
    return table


def downset_weight(state: PureTripartiteState, n: int, center: NormalizedTriple, eps: float,
                   table: SpectrumTable | None = None) -> float:
    """||Q_U psi^(x)n||^2 for U the eps-ball around center: mass of triples majorized by U."""
    table = table or spectrum_table(state, n)
    total = 0.0
    for triple, w in table.positive():
        if triple_majorized_by_ball(triple.normalized(), center, eps):
            total += w
    return min(total, 1.0)


def i_rate_estimate(state: PureTripartiteState, center: NormalizedTriple, eps: float, n_list) -> list[float]:
    """-(1/n) log2 of the downset weight for each n; +inf where the weight vanishes."""
    out = []
    for n in n_list:
        w = downset_weight(state, n, center, eps)
        out.append(math.inf if w <= 0 else max(0.0, -math.log2(w) / n))
    return out


def _downset_weights(table: SpectrumTable) -> dict:
    pos = table.positive()
    out = {}
    for key, _ in pos:
        c = key.normalized()
        out[key] = min(1.0, sum(w for k, w in pos if triple_majorized_by_ball(k.normalized(), c, 0.0)))
    return out


def general_sc_rate_estimate(state: PureTripartiteState, r: float, n: int,
                             grid_step: float | None = None) -> float:
    """Certified lower bound on the strong-converse rate at exponent r from n copies.

    A triple lambda is feasible when -(1/n) log2 ||Q_lambda psi^(x)n||^2 <= r with
    Q_lambda the downset projector of lambda; the candidates are exactly the
    partition triples of every m <= n, so ``grid_step`` is accepted only for
    interface compatibility.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    _check_budget(state, n, N_MAX)
    best = 0.0
    # every m <= n certifies on its own, which keeps the estimate monotone in n
    for m in range(1, n + 1):
        for key, w in _downset_weights(spectrum_table(state, m)).items():
            if math.isinf(r) or -math.log2(w) / m <= r + 1e-12:
                bar = key.normalized()
                best = max(best, min(shannon_entropy(bar.barA), shannon_entropy(bar.barB)))
    return best


def _theta(theta):
    th = np.asarray(theta, dtype=float)
    if th.shape != (3,) or np.any(th < 0) or abs(th.sum() - 1) > 1e-9:
        raise ValueError("theta must be a probability vector on {A, B, C}")
    return th


def e_alpha_theta_bounds(state: PureTripartiteState, alpha: float, theta, n: int,
                         squared: bool = False) -> tuple[float, float]:
    """(M_n, M_n + slack) bracketing E^{alpha,theta}.

    The inner term is (alpha/(1-alpha)) (1/n) log2 ||P_lambda psi^(x)n||, the norm
    rather than its square; ``squared=True`` switches to log2 of the weight.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    th = _theta(theta)
    table = spectrum_table(state, n)
    k = alpha / (1 - alpha)
    factor = 1.0 if squared else 0.5
    best = -math.inf
    for key, w in table.positive():
        bar = key.normalized()
        ent = th[0] * shannon_entropy(bar.barA) + th[1] * shannon_entropy(bar.barB) \
            + th[2] * shannon_entropy(bar.barC)
        best = max(best, ent + k * factor * math.log2(w) / n)
    dims = np.asarray(state.dims, dtype=float)
    slack = (float(th @ dims) + k * float(dims.sum())) * math.log2(n + 1) / n
    return best, best + slack


def e_alpha_theta_variational(cert: FreeSupportCertificate, alpha: float, theta) -> float:
    """E^{alpha,theta} of a free-support state, via the measured distribution."""
    return h_alpha_theta(cert.measured, alpha, tuple(_theta(theta)))
