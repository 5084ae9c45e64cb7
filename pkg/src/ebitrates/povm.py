"""One-shot deterministic protocol: C measures a random-sign POVM.

Each POVM element is lambda_i |v_i><v_i| with v_i a +-1 vector in an
eigenbasis of the C marginal.  Projecting psi onto such a vector leaves a
normalized bipartite state on AB whose min-entropy of entanglement is close
to min{H_inf(A), H_inf(B)} with overwhelming probability; the weights come
from a convex-hull membership LP for the identity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from .state import PureTripartiteState, marginal, renyi_entropy

DIAG_TOL = 1e-10
COMPLETENESS_TOL = 1e-8
HULL_MAX_DC = 8

#: constant c with log2(4 ln(2 d_C^4 (d_A+d_B))) <= log2(m c) for psi^(x)m, psi qubit-qutrit scale
LOSS_CONSTANT = 28 * math.log(2)


class RetryExhausted(RuntimeError):
    pass


class TailBound(NamedTuple):
    value: float
    vacuous: bool


@dataclass(frozen=True, eq=False)
class HullResult:
    feasible: bool
    weights: np.ndarray | None = None
    residual: float = math.inf

    def __bool__(self):
        return self.feasible


@dataclass(eq=False)
class PovmCertificate:
    vectors: np.ndarray
    weights: np.ndarray
    guaranteed_ebits: int
    completeness_residual: float
    min_entropy_floor: float
    seed: int
    cbasis: np.ndarray = field(repr=False)
    strategy: str = "hull"
    attempts: int = 1
    entropies: np.ndarray = field(default=None, repr=False)

    def elements(self) -> list[np.ndarray]:
        """POVM operators on H_C in the original basis."""
        out = []
        for v, lam in zip(self.vectors, self.weights):
            u = self.cbasis @ v
            out.append(lam * np.outer(u, u.conj()))
        return out

    def to_json(self) -> dict:
        return {
            "vectors": [[int(x) for x in v] for v in self.vectors],
            "weights": [float(x) for x in self.weights],
            "guaranteed_ebits": int(self.guaranteed_ebits),
            "min_entropy_floor": float(self.min_entropy_floor),
            "completeness_residual": float(self.completeness_residual),
            "seed": int(self.seed),
            "strategy": self.strategy,
            "attempts": int(self.attempts),
            "cbasis": {"re": self.cbasis.real.tolist(), "im": self.cbasis.imag.tolist()},
        }


def c_eigenbasis(state: PureTripartiteState) -> np.ndarray:
    """Orthonormal eigenbasis of the C marginal (computational basis if already diagonal)."""
    rho = marginal(state, "C")
    off = rho - np.diag(np.diag(rho))
    if np.max(np.abs(off), initial=0.0) < 1e-14:
        return np.eye(rho.shape[0], dtype=complex)
    _, vecs = np.linalg.eigh(rho)
    return vecs.astype(complex)


def slices(state: PureTripartiteState, cbasis=None) -> np.ndarray:
    """Z_k = <u_k|psi as an array of shape (d_C, d_A, d_B)."""
    if cbasis is None:
        cbasis = c_eigenbasis(state)
    cbasis = np.asarray(cbasis)
    if cbasis.shape != (state.dims[2],) * 2:
        raise ValueError("cbasis has the wrong shape")
    rot = cbasis.conj().T @ marginal(state, "C") @ cbasis
    if np.max(np.abs(rot - np.diag(np.diag(rot))), initial=0.0) > DIAG_TOL:
        raise ValueError("cbasis does not diagonalize the C marginal")
    psi = state.amplitudes
    if np.allclose(cbasis, np.eye(len(cbasis))):
        Z = np.moveaxis(psi, 2, 0)
    else:
        Z = np.einsum("abc,ck->kab", psi, cbasis.conj())
    if not np.any(Z.imag):
        Z = Z.real
    return np.ascontiguousarray(Z)


def rademacher_project(state: PureTripartiteState, signs, cbasis=None) -> np.ndarray:
    """Z = sum_k gamma_k Z_k, the AB coefficient matrix after projecting C onto v."""
    signs = np.asarray(signs)
    if signs.shape != (state.dims[2],) or not np.all(np.abs(signs) == 1):
        raise ValueError("signs must be a +-1 vector of length d_C")
    return np.tensordot(signs.astype(float), slices(state, cbasis), axes=1)


def _e_inf_batch(Z: np.ndarray) -> np.ndarray:
    """-2 log2 of the top singular value for a stack of matrices."""
    if Z.shape[1] == 1 or Z.shape[2] == 1:
        smax2 = np.sum(np.abs(Z) ** 2, axis=(1, 2))
    else:
        smax2 = np.linalg.norm(Z, 2, axis=(1, 2)) ** 2
    with np.errstate(divide="ignore"):
        return np.maximum(0.0, -np.log2(smax2))


def projected_min_entropies(state, vectors, cbasis=None, chunk: int = 256) -> np.ndarray:
    Z = slices(state, cbasis)
    vectors = np.asarray(vectors, dtype=float)
    out = np.empty(len(vectors))
    for lo in range(0, len(vectors), chunk):
        block = np.tensordot(vectors[lo:lo + chunk], Z, axes=1)
        out[lo:lo + chunk] = _e_inf_batch(block)
    return out


def min_hinf_ab(state: PureTripartiteState) -> float:
    return min(renyi_entropy(state.spectrum(s), math.inf) for s in "AB")


def deterministic_rate(state: PureTripartiteState) -> float:
    """Optimal rate of deterministic EPR_AB distillation: min{H_inf(A), H_inf(B)}."""
    return min_hinf_ab(state)


def tail_bound(state: PureTripartiteState, h: float) -> TailBound:
    """(d_A+d_B) exp(-2^(min H_inf - h) / 2) bounds P(E_inf(phi) <= h)."""
    dA, dB, _ = state.dims
    Z = slices(state)
    sA = np.linalg.norm(np.einsum("kab,kcb->ac", Z, Z.conj()), 2)
    sB = np.linalg.norm(np.einsum("kab,kac->bc", Z.conj(), Z), 2)
    sigma2 = max(sA, sB)
    if h == -math.inf:
        return TailBound(0.0, False)
    val = (dA + dB) * math.exp(-0.5 * 2.0 ** (-math.log2(sigma2) - h))
    return TailBound(val, val >= 1.0)


def loss_bits(dims) -> float:
    dA, dB, dC = dims
    return math.log2(4 * math.log(2 * dC**4 * (dA + dB)))


def entropy_threshold(state: PureTripartiteState) -> float:
    """Samples must exceed this min-entropy for the union bound in the proof."""
    dA, dB, dC = state.dims
    return min_hinf_ab(state) - math.log2(2 * math.log(2 * dC**4 * (dA + dB)))


def guaranteed_ebits(state: PureTripartiteState) -> int:
    return max(0, math.ceil(min_hinf_ab(state) - loss_bits(state.dims)))


def hull_membership(ops, tol: float = COMPLETENESS_TOL) -> HullResult:
    """Convex weights with sum_i w_i ops_i = I, or an infeasible result."""
    ops = np.asarray(ops)
    if ops.ndim != 3 or ops.shape[1] != ops.shape[2] or len(ops) == 0:
        raise ValueError("ops must be a nonempty stack of square matrices")
    N, d, _ = ops.shape
    iu = np.triu_indices(d)
    rows = [ops[:, iu[0], iu[1]].real.T]
    rhs = [np.eye(d)[iu]]
    if np.any(ops.imag):
        ju = np.triu_indices(d, 1)
        rows.append(ops[:, ju[0], ju[1]].imag.T)
        rhs.append(np.zeros(len(ju[0])))
    rows.append(np.ones((1, N)))
    rhs.append([1.0])
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    res = linprog(np.zeros(N), A_eq=A, b_eq=b, bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10})
    if res.status != 0:
        return HullResult(False)
    w = np.clip(res.x, 0.0, None)
    # polish on the support so the identity is met to rounding accuracy
    on = w > 1e-13
    sol, *_ = np.linalg.lstsq(A[:, on], b, rcond=None)
    if np.all(sol >= 0):
        w = np.zeros(N)
        w[on] = sol
    resid = float(np.linalg.norm(np.tensordot(w, ops, axes=1) - np.eye(d), 2))
    if resid > tol:
        return HullResult(False, w, resid)
    return HullResult(True, w, resid)


def _orbit(v: np.ndarray) -> np.ndarray:
    """v times every character of (Z_2)^k, with k = ceil(log2 d) and injective labels."""
    d = len(v)
    k = max(1, math.ceil(math.log2(d)))
    labels = np.arange(d)
    s = np.arange(2**k)
    parity = np.zeros((2**k, d), dtype=int)
    for bit in range(k):
        parity ^= ((s[:, None] >> bit) & 1) & ((labels[None, :] >> bit) & 1)
    return v[None, :] * (1 - 2 * parity)


def _best_hull(vecs, ent):
    """Hull LP restricted to the highest-entropy samples, cut-off found by bisection."""
    order = np.argsort(ent)[::-1]
    ops = np.einsum("ni,nj->nij", vecs, vecs).astype(float)

    def attempt(k):
        sel = order[:k]
        return sel, hull_membership(ops[sel])

    sel, hull = attempt(len(vecs))
    if not hull:
        return None
    lo, hi = 0, len(vecs)  # infeasible with lo vectors, feasible with hi
    best = (sel, hull)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        cand = attempt(mid)
        if cand[1]:
            hi, best = mid, cand
        else:
            lo = mid
    sel, hull = best
    keep = hull.weights > 0
    return vecs[sel][keep], hull.weights[keep], ent[sel][keep]


def _orbit_draws(dims, work: int = 2**22) -> int:
    dA, dB, dC = dims
    return max(1, min(64, work // (dA * dB * dC)))


def _best_orbit(state, rng, cbasis, draws):
    """Several independent orbits; keep the one with the largest minimum entropy."""
    best = None
    for _ in range(draws):
        vecs = _orbit(rng.choice(np.array([-1, 1]), size=state.dims[2]))
        ent = projected_min_entropies(state, vecs, cbasis)
        if best is None or ent.min() > best[1].min():
            best = (vecs, ent)
    return best


def build_povm(state: PureTripartiteState, seed: int, samples: int | None = None,
               max_retries: int = 64, strategy: str = "auto") -> PovmCertificate:
    """Sample sign vectors until the identity is in their hull and all are high-entropy.

    ``strategy="hull"`` draws ``samples`` (default d_C^4) vectors and solves the
    membership LP on the highest-entropy subset that still contains I.
    ``strategy="orbit"`` draws one vector and uses its orbit under sign
    characters, which sums to a multiple of the identity exactly and keeps each
    element marginally uniform; a few orbits are drawn and the best kept.
    ``auto`` picks hull up to d_C = 8.
    """
    dA, dB, dC = state.dims
    if strategy == "auto":
        strategy = "hull" if dC <= HULL_MAX_DC else "orbit"
    if strategy not in ("hull", "orbit"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if samples is None:
        samples = dC**4
    rng = np.random.default_rng(seed)
    cbasis = c_eigenbasis(state)
    threshold = entropy_threshold(state)
    n = guaranteed_ebits(state)
    for attempt in range(1, max_retries + 1):
        if strategy == "hull":
            vecs = rng.choice(np.array([-1, 1]), size=(samples, dC))
            ent = projected_min_entropies(state, vecs, cbasis)
        else:
            vecs, ent = _best_orbit(state, rng, cbasis, _orbit_draws(state.dims))
        if np.any(ent < threshold):
            continue
        if strategy == "hull":
            found = _best_hull(vecs, ent)
            if found is None:
                continue
            vecs, weights, ent = found
        else:
            weights = np.full(len(vecs), 1.0 / len(vecs))
        total = np.einsum("n,ni,nj->ij", weights, vecs, vecs)
        resid = float(np.linalg.norm(total - np.eye(dC), 2))
        if resid > COMPLETENESS_TOL:
            continue
        return PovmCertificate(
            vectors=vecs.astype(int),
            weights=weights,
            guaranteed_ebits=n,
            completeness_residual=resid,
            min_entropy_floor=float(ent.min()),
            seed=seed,
            cbasis=cbasis,
            strategy=strategy,
            attempts=attempt,
            entropies=ent,
        )
    raise RetryExhausted(f"no valid POVM after {max_retries} attempts (seed {seed})")
