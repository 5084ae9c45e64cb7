"""Independent brute-force oracles; none of these call into ebitrates' solvers."""
import math

import numpy as np


def renyi(p, alpha):
    p = np.asarray(p, dtype=float)
    p = p[p > 1e-14]
    if alpha == 1:
        return float(-np.sum(p * np.log2(p)))
    if alpha == 0:
        return math.log2(len(p))
    if math.isinf(alpha):
        return float(-np.log2(p.max()))
    return float(np.log2(np.sum(p ** alpha)) / (1 - alpha))


def binary_entropy(x):
    return float(-x * math.log2(x) - (1 - x) * math.log2(1 - x))


def direct_rate_alpha_grid(p, r, points=200001):
    """sup_{alpha>1} r/(1-alpha) + H_alpha on a dense grid in u = 1/alpha, plus alpha = inf."""
    u = np.linspace(1e-7, 1 - 1e-7, points)
    alpha = 1 / u
    p = np.asarray(p, dtype=float)
    p = p[p > 1e-14]
    pm = p.max()
    logs = alpha * np.log2(pm) + np.log2(np.sum((p[None, :] / pm) ** alpha[:, None], axis=1))
    vals = r / (1 - alpha) + logs / (1 - alpha)
    return float(max(vals.max(), renyi(p, math.inf)))


def sc_rate_alpha_grid(p, r, points=20001):
    """inf_{alpha in [0,1)} r alpha/(1-alpha) + H_alpha, on a grid in u = alpha/(1-alpha)."""
    u = np.geomspace(1e-6, 1e6, points)
    alpha = u / (1 + u)
    p = np.asarray(p, dtype=float)
    p = p[p > 1e-14]
    h = np.log2(np.sum(p[None, :] ** alpha[:, None], axis=1)) / (1 - alpha)
    return float(min((r * u + h).min(), renyi(p, 0), renyi(p, 1) if r == 0 else math.inf))


def _simplex_grid(step):
    n = int(round(1 / step))
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = i + j <= n
    return np.stack([i[keep], j[keep], n - i[keep] - j[keep]], axis=1) / n


def _kl_rows(x, p):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log2(x / p), 0.0).sum(-1)


def _min_marginal_entropy(x, labels):
    out = []
    for pos in (0, 1):
        values = sorted({lab[pos] for lab in labels})
        acc = np.zeros((len(x), len(values)))
        for k, lab in enumerate(labels):
            acc[:, values.index(lab[pos])] += x[:, k]
        with np.errstate(divide="ignore", invalid="ignore"):
            out.append(-np.where(acc > 0, acc * np.log2(acc), 0.0).sum(1))
    return np.minimum(*out)


def kl_ball_grid(P, r, step=0.005):
    """Plain exhaustive grid: max of min{H(Q_A), H(Q_B)} over grid points with D(Q||P) <= r."""
    q = _simplex_grid(step)
    p = np.asarray(P.probs)
    ok = _kl_rows(q, p) <= r
    return float(_min_marginal_entropy(q[ok], P.support).max()) if ok.any() else -math.inf


def kl_ball_ray_grid(P, r, step=0.005):
    """Grid points outside the ball are pulled toward P onto the boundary D = r by bisection."""
    q = _simplex_grid(step)
    p = np.asarray(P.probs)
    lo = np.where(_kl_rows(q, p) <= r, 1.0, 0.0)
    hi = np.ones(len(q))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        good = _kl_rows(p + mid[:, None] * (q - p), p) <= r
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    x = p + lo[:, None] * (q - p)
    return float(_min_marginal_entropy(x, P.support).max())


def h_alpha_theta_grid(P, alpha, theta, step=0.005):
    q = _simplex_grid(step)
    p = np.asarray(P.probs)
    t = alpha / (1 - alpha)
    ents = []
    for pos in (0, 1, 2):
        values = sorted({lab[pos] for lab in P.support})
        acc = np.zeros((len(q), len(values)))
        for k, lab in enumerate(P.support):
            acc[:, values.index(lab[pos])] += q[:, k]
        with np.errstate(divide="ignore", invalid="ignore"):
            ents.append(-np.where(acc > 0, acc * np.log2(acc), 0.0).sum(1))
    val = sum(th * e for th, e in zip(theta, ents)) - t * _kl_rows(q, p)
    return float(val.max())


def epr_n2_dense_weights():
    """||(P_lA x P_lB) EPR^(x)2||^2 from explicit 16x16 swap matrices, legs ordered A1 B1 A2 B2."""
    epr = np.array([1, 0, 0, 1]) / math.sqrt(2)
    psi = np.kron(epr, epr)
    dim = 16

    def swap(leg1, leg2):
        S = np.zeros((dim, dim))
        for idx in range(dim):
            bits = [(idx >> (3 - k)) & 1 for k in range(4)]
            bits[leg1], bits[leg2] = bits[leg2], bits[leg1]
            S[sum(b << (3 - k) for k, b in enumerate(bits)), idx] = 1
        return S

    I = np.eye(dim)
    sA, sB = swap(0, 2), swap(1, 3)
    proj = {(2,): (I + sA) / 2, (1, 1): (I - sA) / 2}
    projB = {(2,): (I + sB) / 2, (1, 1): (I - sB) / 2}
    return {(la, lb): float(np.linalg.norm(pa @ pb @ psi) ** 2)
            for la, pa in proj.items() for lb, pb in projB.items()}


def post_measurement_e_inf(amps, cvec):
    """E_inf of the normalized AB state after projecting C onto cvec (not normalized)."""
    Z = np.einsum("abc,c->ab", amps, np.conj(cvec))
    Z = Z / np.linalg.norm(Z)
    s = np.linalg.svd(Z, compute_uv=False)
    return float(-2 * np.log2(s[0]))


def truncation_dense(amps, tA, tB):
    """Simultaneous truncation with explicit Kronecker operators on the full vector."""
    dA, dB, dC = amps.shape
    psi = amps.reshape(-1)
    mat = amps.reshape(dA, dB * dC)
    rhoA = mat @ mat.conj().T
    matB = np.transpose(amps, (1, 0, 2)).reshape(dB, dA * dC)
    rhoB = matB @ matB.conj().T

    def f(rho, t):
        ev, U = np.linalg.eigh(rho)
        return (U * np.where(ev > t, np.sqrt(t / np.maximum(ev, 1e-300)), 1.0)) @ U.conj().T

    MA = np.kron(np.kron(f(rhoA, tA), np.eye(dB)), np.eye(dC))
    MB = np.kron(np.kron(np.eye(dA), f(rhoB, tB)), np.eye(dC))
    return tuple(float(np.linalg.norm(M @ psi) ** 2) for M in (MA, MB, MA @ MB))
