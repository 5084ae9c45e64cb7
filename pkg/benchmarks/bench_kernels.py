"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from ebitrates import _fallback
from ebitrates.freesupport import EntropyProgram
from ebitrates.schur_weyl import _perm_table, character
from ebitrates.state import Distribution

try:
    from ebitrates import _kernels
except ImportError:
    _kernels = None


def newton_case(m: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    support = [(i, (i * 7 + 3) % m, (i * 13 + 5) % m) for i in range(m)]
    P = Distribution.from_probs(rng.dirichlet(np.ones(m)), support)
    prog = EntropyProgram(P)
    args = (prog.p, prog.logp, prog.idx, prog.nlab, np.array([0.4, 0.6, 0.0]), 0.7)
    return args


def perm_case(n: int, d: int):
    idx, ctypes = _perm_table(n, d)
    coeffs = np.array([character((n - 1, 1), c) for c in ctypes], dtype=float)
    return idx, coeffs


def bench(label, py, cc, args, repeat):
    t_py = min(timeit.repeat(lambda: py(*args), number=1, repeat=repeat))
    row = f"{label:<32} python {t_py * 1e3:9.3f} ms"
    if cc is not None:
        t_cc = min(timeit.repeat(lambda: cc(*args), number=1, repeat=repeat))
        row += f"   compiled {t_cc * 1e3:9.3f} ms   speedup {t_py / t_cc:6.1f}x"
    print(row)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    repeat = ap.parse_args().repeat
    if _kernels is None:
        print("compiled extension not built; timing the fallback only")
    for m in (3, 8, 24):
        bench(f"entropy_newton m={m}", _fallback.entropy_newton,
              _kernels and _kernels.entropy_newton, newton_case(m), repeat)
    for n, d in ((5, 2), (6, 2), (5, 3)):
        bench(f"permutation_accumulate n={n} d={d}", _fallback.permutation_accumulate,
              _kernels and _kernels.permutation_accumulate, perm_case(n, d), repeat)


if __name__ == "__main__":
    main()
