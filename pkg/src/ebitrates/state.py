"""Tripartite pure states, marginals and entropy functionals.

All logarithms are base 2. Probabilities below :data:`ZERO_TOL` count as
exact zeros when supports are formed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np

ZERO_TOL = 1e-14
NORM_TOL = 1e-12

SUBSYSTEMS = ("A", "B", "C")
_AXIS = {"A": 0, "B": 1, "C": 2}


class StateFormatError(ValueError):
    """Raised for malformed state files or amplitude arrays."""


@dataclass(frozen=True, eq=False)
class PureTripartiteState:
    """Unit vector in H_A (x) H_B (x) H_C stored as a (d_A, d_B, d_C) tensor."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 3 or min(amps.shape) < 1:
            raise StateFormatError(f"expected a 3-index tensor, got shape {amps.shape}")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise StateFormatError(f"state is not normalized (|psi|^2 = {norm2!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, amps) -> "PureTripartiteState":
        amps = np.asarray(amps, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise StateFormatError("zero vector cannot be normalized")
        return cls(amps / norm)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.amplitudes.shape)

    def marginal(self, subsystem: str) -> np.ndarray:
        return marginal(self, subsystem)

    def spectrum(self, subsystem: str) -> "MarginalSpectrum":
        return MarginalSpectrum.from_density(marginal(self, subsystem))

    def tensor_power(self, n: int) -> "PureTripartiteState":
        """psi^(x)n with each party's n copies grouped into one local system."""
        if n < 1:
            raise ValueError("n must be positive")
        out = np.ones((1, 1, 1), dtype=complex)
        for _ in range(n):
            out = np.einsum("abc,xyz->axbycz", out, self.amplitudes).reshape(
                out.shape[0] * self.dims[0],
                out.shape[1] * self.dims[1],
                out.shape[2] * self.dims[2],
            )
        return PureTripartiteState.from_unnormalized(out)

    def to_json(self) -> dict:
        amps = []
        for idx in zip(*np.nonzero(np.abs(self.amplitudes) > 0)):
            z = self.amplitudes[idx]
            amps.append({"idx": [int(i) for i in idx], "re": float(z.real), "im": float(z.imag)})
        return {"dims": list(self.dims), "amps": amps}

    @classmethod
    def from_json(cls, payload: dict) -> "PureTripartiteState":
        try:
            dims = [int(d) for d in payload["dims"]]
            entries = payload["amps"]
        except (KeyError, TypeError, ValueError) as exc:
            raise StateFormatError(f"malformed state JSON: {exc}") from None
        if len(dims) != 3 or min(dims) < 1:
            raise StateFormatError(f"dims must be three positive integers, got {dims}")
        amps = np.zeros(dims, dtype=complex)
        for entry in entries:
            try:
                idx = tuple(int(i) for i in entry["idx"])
                value = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
            except (KeyError, TypeError, ValueError) as exc:
                raise StateFormatError(f"malformed amplitude entry {entry!r}: {exc}") from None
            if len(idx) != 3 or any(not 0 <= i < d for i, d in zip(idx, dims)):
                raise StateFormatError(f"index {idx} out of range for dims {dims}")
            amps[idx] += value
        norm2 = float(np.vdot(amps, amps).real)
        # hand-written files carry ~1e-9 rounding in 1/sqrt(k) style amplitudes
        if abs(norm2 - 1.0) > 1e-6:
            raise StateFormatError(f"state is not normalized (|psi|^2 = {norm2!r})")
        return cls.from_unnormalized(amps)

    @classmethod
    def load(cls, path) -> "PureTripartiteState":
        with open(path) as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise StateFormatError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_json(payload)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")


@dataclass(frozen=True)
class Distribution:
    """Probability vector over an ordered set of distinct labels."""

    support: tuple
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        support = tuple(self.support)
        probs = np.asarray(self.probs, dtype=float).copy()
        if probs.ndim != 1 or len(probs) != len(support):
            raise ValueError("support and probs must have equal length")
        if len(set(support)) != len(support):
            raise ValueError("support labels must be unique")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12 * max(1, len(probs)):
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_probs(cls, probs: Sequence[float], labels: Iterable[Hashable] | None = None):
        probs = np.asarray(probs, dtype=float)
        if labels is None:
            labels = range(len(probs))
        return cls(tuple(labels), probs / probs.sum())

    @classmethod
    def from_mapping(cls, mapping: dict):
        labels = tuple(mapping)
        return cls.from_probs([mapping[k] for k in labels], labels)

    def __len__(self):
        return len(self.support)

    def nonzero(self) -> "Distribution":
        keep = self.probs > ZERO_TOL
        labels = tuple(lab for lab, k in zip(self.support, keep) if k)
        return Distribution.from_probs(self.probs[keep], labels)

    def marginal(self, position: int) -> "Distribution":
        """Marginal on one coordinate of tuple-valued labels."""
        acc: dict = {}
        for lab, p in zip(self.support, self.probs):
            acc[lab[position]] = acc.get(lab[position], 0.0) + p
        return Distribution.from_mapping(acc)


@dataclass(frozen=True)
class MarginalSpectrum:
    """Nonincreasing eigenvalue list of a reduced density matrix."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        ev = np.where(np.abs(ev) < ZERO_TOL, 0.0, ev)
        if np.any(ev < 0):
            raise ValueError("eigenvalues must be nonnegative")
        ev = np.sort(ev)[::-1]
        if abs(ev.sum() - 1.0) > 1e-10:
            raise ValueError(f"eigenvalues sum to {ev.sum()!r}, not 1")
        ev = ev / ev.sum()
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @classmethod
    def from_density(cls, rho: np.ndarray) -> "MarginalSpectrum":
        ev = np.linalg.eigvalsh(rho)
        return cls(np.clip(ev, 0.0, None) / np.clip(ev, 0.0, None).sum())

    @property
    def probs(self) -> np.ndarray:
        return self.eigenvalues

    def __len__(self):
        return len(self.eigenvalues)


def _probs(spectrum) -> np.ndarray:
    if isinstance(spectrum, (Distribution, MarginalSpectrum)):
        p = spectrum.probs
    else:
        p = np.asarray(spectrum, dtype=float)
    return p


def marginal(state: PureTripartiteState, subsystem: str) -> np.ndarray:
    """Reduced density matrix on ``subsystem`` (any nonempty subset of ABC)."""
    if not subsystem or any(s not in _AXIS for s in subsystem.upper()):
        raise ValueError(f"unknown subsystem {subsystem!r}")
    keep = sorted({_AXIS[s] for s in subsystem.upper()})
    psi = state.amplitudes
    traced = [ax for ax in range(3) if ax not in keep]
    order = keep + traced
    mat = np.transpose(psi, order).reshape(int(np.prod([psi.shape[k] for k in keep])), -1)
    rho = mat @ mat.conj().T
    return 0.5 * (rho + rho.conj().T)


def shannon_entropy(p) -> float:
    p = _probs(p)
    p = p[p > ZERO_TOL]
    return float(-np.sum(p * np.log2(p)))


def renyi_entropy(spectrum, alpha: float) -> float:
    """Renyi entropy in bits, with H_0, H_1 and H_inf as separate branches."""
    if alpha < 0 or np.isnan(alpha):
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    p = _probs(spectrum)
    p = p[p > ZERO_TOL]
    if alpha == 0:
        return float(np.log2(len(p)))
    if alpha == 1:
        return float(-np.sum(p * np.log2(p)))
    if np.isinf(alpha):
        return float(-np.log2(p.max()))
    return float(log_power_sum(p, alpha) / ((1.0 - alpha) * np.log(2)))


def log_power_sum(p: np.ndarray, alpha: float) -> float:
    """ln sum p^alpha, accurate both near alpha = 1 and for large alpha."""
    p = p[p > ZERO_TOL]
    if abs(alpha - 1.0) < 0.5:
        lp = np.log(p)
        return float(np.log1p(np.sum(p * np.expm1((alpha - 1.0) * lp))))
    pmax = p.max()
    return float(alpha * np.log(pmax) + np.log(np.sum((p / pmax) ** alpha)))


def relative_entropy(q, p) -> float:
    """D(q||p) in bits; +inf when supp q is not inside supp p."""
    if isinstance(q, Distribution) and isinstance(p, Distribution):
        if set(q.support) != set(p.support):
            raise ValueError("distributions are over different label sets")
        index = {lab: i for i, lab in enumerate(p.support)}
        pv = np.array([p.probs[index[lab]] for lab in q.support])
        qv = q.probs
    else:
        qv, pv = _probs(q), _probs(p)
        if qv.shape != pv.shape:
            raise ValueError("distributions are over different label sets")
    on = qv > ZERO_TOL
    if np.any(pv[on] <= ZERO_TOL):
        return float("inf")
    return float(max(0.0, np.sum(qv[on] * np.log2(qv[on] / pv[on]))))


def min_entropy_entanglement(Z: np.ndarray, tol: float = 1e-10) -> float:
    """E_inf of the bipartite pure state with coefficient matrix Z."""
    Z = np.asarray(Z)
    fro = np.linalg.norm(Z)
    if abs(fro - 1.0) > tol:
        raise ValueError(f"bipartite state not normalized (|Z|_F = {fro!r})")
    smax = np.linalg.norm(Z, 2)
    return float(max(0.0, -2.0 * np.log2(smax)))


def schmidt_spectrum(Z: np.ndarray) -> MarginalSpectrum:
    s = np.linalg.svd(np.asarray(Z), compute_uv=False)
    return MarginalSpectrum(s**2 / np.sum(s**2))


# --- standard states -------------------------------------------------------

def ghz_state() -> PureTripartiteState:
    amps = np.zeros((2, 2, 2), dtype=complex)
    amps[0, 0, 0] = amps[1, 1, 1] = 1
    return PureTripartiteState.from_unnormalized(amps)


def w_state(a: float = 1 / 3, b: float = 1 / 3, c: float = 1 / 3) -> PureTripartiteState:
    """sqrt(a)|100> + sqrt(b)|010> + sqrt(c)|001>."""
    amps = np.zeros((2, 2, 2), dtype=complex)
    amps[1, 0, 0] = np.sqrt(a)
    amps[0, 1, 0] = np.sqrt(b)
    amps[0, 0, 1] = np.sqrt(c)
    return PureTripartiteState.from_unnormalized(amps)


def product_state(dims=(1, 1, 1)) -> PureTripartiteState:
    amps = np.zeros(dims, dtype=complex)
    amps[0, 0, 0] = 1
    return PureTripartiteState(amps)


def epr_state(d: int = 2) -> PureTripartiteState:
    """Maximally entangled pair on AB, trivial C."""
    amps = np.zeros((d, d, 1), dtype=complex)
    for i in range(d):
        amps[i, i, 0] = 1
    return PureTripartiteState.from_unnormalized(amps)


def random_state(dims, rng=None) -> PureTripartiteState:
    rng = np.random.default_rng(rng)
    amps = rng.normal(size=dims) + 1j * rng.normal(size=dims)
    return PureTripartiteState.from_unnormalized(amps)


BUILTIN_STATES = {
    "W": w_state,
    "GHZ": ghz_state,
    "PRODUCT": product_state,
    "EPR": epr_state,
}
