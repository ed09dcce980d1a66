import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invscales import _kernels as K


def test_splitmix64_reference_values():
    # published outputs of the splitmix64 generator
    assert int(K.splitmix64_raw(0, 1)[0]) == 0xE220A8397B1DCDAF
    assert [int(v) for v in K.splitmix64_raw(1234567, 3)] == [
        6457827717110365317, 3203168211198807973, 9817491932198370423]


@pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), n=st.integers(1, 500))
def test_splitmix_parity(seed, n):
    np.testing.assert_array_equal(K.splitmix64_raw_jit(seed, n), K.splitmix64_raw_np(seed, n))
    np.testing.assert_array_equal(K.splitmix64_uniforms_jit(seed, n), K.splitmix64_uniforms_np(seed, n))


CHAINS = [
    ([K.LINEAR], [0.0], [0.0], np.linspace(-5, 5, 101)),
    ([K.LOG], [2.0], [0.0], np.logspace(-3, 3, 101)),
    ([K.LOG_LINEAR], [1.5], [0.0], np.logspace(-3, 3, 101)),
    ([K.LINEAR_LOG], [2.0, ], [0.7], np.linspace(-1.0, 10, 101)),
    ([K.LOG_LINEAR_LOG], [3.0], [2.0], np.linspace(0.001, 0.999, 101)),
    ([K.SQUARE, K.LINEAR_LOG], [0.0, 2.0], [0.0, 1.0], np.linspace(-5, 5, 101)),
]


@pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("codes,alphas,betas,z", CHAINS)
def test_scale_chain_parity(codes, alphas, betas, z):
    args = (np.array(codes, dtype=np.int64), np.array(alphas), np.array(betas), z)
    w1, d1 = K.scale_chain_jit(*args)
    w2, d2 = K.scale_chain_np(*args)
    np.testing.assert_allclose(w1, w2, rtol=1e-14, atol=1e-300)
    np.testing.assert_allclose(d1, d2, rtol=1e-14, atol=1e-300)


@pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")
def test_invert_panels_parity():
    from invscales.catalog import NamedFamily, build
    from invscales.sampling import inverse_cdf

    inv = inverse_cdf(build(NamedFamily("Gamma", {"alpha": 2.0, "lambda": 1.0})))
    targets = K.splitmix64_uniforms(7, 2000) * inv.total
    idx = np.clip(np.searchsorted(inv.upper, targets, side="right"), 0, len(inv.starts) - 1).astype(np.int64)
    a = K.invert_panels_jit(inv.coeffs, inv.offsets, idx, targets, 60)
    b = K.invert_panels_np(inv.coeffs, inv.offsets, idx, targets, 60)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


_SNIPPET = """
import sys
from invscales import _kernels
from invscales.catalog import NamedFamily, build
from invscales.sampling import sample
print(_kernels.USE_JIT)
sys.stdout.write(sample(build(NamedFamily("Gamma", {"alpha": 1.0, "lambda": 1.0})), 200, seed=11).tobytes().hex())
"""


def _run(env_flag):
    env = dict(os.environ)
    env.pop("INVSCALES_NO_JIT", None)
    if env_flag is not None:
        env["INVSCALES_NO_JIT"] = env_flag
    out = subprocess.run([sys.executable, "-c", _SNIPPET], env=env, capture_output=True, text=True, check=True)
    flag, data = out.stdout.split("\n", 1)
    return flag, data


def test_no_jit_flag_selects_numpy_and_matches():
    flag_np, data_np = _run("1")
    assert flag_np == "False"
    flag_default, data_default = _run(None)
    assert flag_default == str(K.HAVE_NUMBA)
    a = np.frombuffer(bytes.fromhex(data_np))
    b = np.frombuffer(bytes.fromhex(data_default))
    np.testing.assert_allclose(a, b, rtol=1e-13)
