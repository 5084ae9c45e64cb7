import os
import subprocess
import sys

import numpy as np
import pytest

from ebitrates import _backend, _fallback


def test_env_var_forces_fallback():
    env = dict(os.environ, EBITRATES_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import ebitrates; print(ebitrates.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


needs_compiled = pytest.mark.skipif(_backend.BACKEND != "compiled", reason="extension not built")


@needs_compiled
def test_permutation_accumulate_agrees():
    rng = np.random.default_rng(0)
    idx = np.stack([rng.permutation(27) for _ in range(12)]).astype(np.int64)
    coeffs = rng.normal(size=12)
    assert np.allclose(_backend.permutation_accumulate(idx, coeffs),
                       _fallback.permutation_accumulate(idx, coeffs), atol=1e-14)


@needs_compiled
@pytest.mark.parametrize("t", [1e-8, 0.3, 5.0, 3000.0])
def test_entropy_newton_agrees(t):
    rng = np.random.default_rng(1)
    labels = [(0, 1, 0), (1, 0, 0), (0, 0, 1), (1, 1, 1)]
    p = rng.dirichlet(np.ones(len(labels)))
    idx = np.array([[lab[s] for lab in labels] for s in range(3)], dtype=np.int64)
    nlab = np.array([2, 2, 2], dtype=np.int64)
    w = np.array([0.3, 0.5, 0.2])
    qc, _, okc = _backend.entropy_newton(p, np.log(p), idx, nlab, w, t)
    qf, _, okf = _fallback.entropy_newton(p, np.log(p), idx, nlab, w, t)
    assert okc and okf
    assert np.allclose(qc, qf, atol=1e-9)
