"""Hot numeric kernels.

Each kernel exists twice: a loop version compiled with numba ``@njit`` and a
vectorised pure-numpy version.  The module-level names (``scale_chain``,
``splitmix64_uniforms``, ``invert_panels``) point at the compiled version
unless numba is missing or ``INVSCALES_NO_JIT`` is set to a truthy value.
Both versions must agree to rounding; the test suite checks that.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_flag = os.environ.get("INVSCALES_NO_JIT", "").strip().lower()
USE_JIT = HAVE_NUMBA and _flag not in {"1", "true", "yes", "on"}

# stage codes understood by scale_chain
LINEAR, LOG, LOG_LINEAR, LINEAR_LOG, LOG_LINEAR_LOG, SQUARE = range(6)

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO_M53 = 2.0**-53


# --------------------------------------------------------------------------
# scale chains: w = f_m(...f_1(z)), dw/dz by the chain rule (signed)
# --------------------------------------------------------------------------

def scale_chain_np(codes, alphas, betas, z):
    x = np.array(z, dtype=np.float64, copy=True)
    slope = np.ones_like(x)
    with np.errstate(all="ignore"):
        for c, a, b in zip(codes, alphas, betas):
            if c == LINEAR:
                y, dy = x, np.ones_like(x)
            elif c == LOG:
                y, dy = a * np.log(x), a / x
            elif c == LOG_LINEAR:
                if a == 0.0:
                    y, dy = x, np.ones_like(x)
                else:
                    y, dy = x - a * np.log(x), 1.0 - a / x
            elif c == LINEAR_LOG:
                y, dy = a * np.log1p(b * x), a * b / (1.0 + b * x)
            elif c == LOG_LINEAR_LOG:
                y = np.zeros_like(x)
                dy = np.zeros_like(x)
                if a != 1.0:
                    y = y + (a - 1.0) * np.log(x)
                    dy = dy + (a - 1.0) / x
                if b != 1.0:
                    y = y + (b - 1.0) * np.log1p(-x)
                    dy = dy - (b - 1.0) / (1.0 - x)
            else:
                y, dy = x * x, 2.0 * x
            slope = slope * dy
            x = y
    return x, slope


def splitmix64_uniforms_np(seed, n):
    k = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed % 2**64) + k * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def splitmix64_raw_np(seed, n):
    k = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed % 2**64) + k * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def invert_panels_np(coeffs, offsets, panel, targets, iters):
    """Solve F_p(s) = target - offset_p for s in [-1, 1] by bisection.

    ``coeffs[p]`` holds Chebyshev coefficients of the within-panel cumulative
    mass F_p, which is nondecreasing with F_p(-1) = 0.
    """
    c = coeffs[panel]
    goal = targets - offsets[panel]
    lo = np.full(goal.shape, -1.0)
    hi = np.ones_like(lo)
    deg = c.shape[1] - 1
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        b1 = np.zeros_like(mid)
        b2 = np.zeros_like(mid)
        for j in range(deg, 0, -1):
            b1, b2 = 2.0 * mid * b1 - b2 + c[:, j], b1
        val = mid * b1 - b2 + c[:, 0]
        below = val < goal
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


if HAVE_NUMBA:

    @njit(cache=True, error_model="numpy")
    def scale_chain_jit(codes, alphas, betas, z):
        n = z.shape[0]
        w = np.empty(n)
        d = np.empty(n)
        for i in range(n):
            x = z[i]
            slope = 1.0
            for s in range(codes.shape[0]):
                c = codes[s]
                a = alphas[s]
                b = betas[s]
                if c == 0:
                    y = x
                    dy = 1.0
                elif c == 1:
                    y = a * np.log(x)
                    dy = a / x
                elif c == 2:
                    if a == 0.0:
                        y = x
                        dy = 1.0
                    else:
                        y = x - a * np.log(x)
                        dy = 1.0 - a / x
                elif c == 3:
                    y = a * np.log1p(b * x)
                    dy = a * b / (1.0 + b * x)
                elif c == 4:
                    y = 0.0
                    dy = 0.0
                    if a != 1.0:
                        y += (a - 1.0) * np.log(x)
                        dy += (a - 1.0) / x
                    if b != 1.0:
                        y += (b - 1.0) * np.log1p(-x)
                        dy -= (b - 1.0) / (1.0 - x)
                else:
                    y = x * x
                    dy = 2.0 * x
                slope *= dy
                x = y
            w[i] = x
            d[i] = slope
        return w, d

    @njit(cache=True, error_model="numpy")
    def _splitmix64_raw_jit(seed, n):
        out = np.empty(n, dtype=np.uint64)
        state = np.uint64(seed)
        g = np.uint64(_GOLDEN)
        m1 = np.uint64(_MIX1)
        m2 = np.uint64(_MIX2)
        s30 = np.uint64(30)
        s27 = np.uint64(27)
        s31 = np.uint64(31)
        for i in range(n):
            state = state + g
            z = state
            z = (z ^ (z >> s30)) * m1
            z = (z ^ (z >> s27)) * m2
            out[i] = z ^ (z >> s31)
        return out

    @njit(cache=True, error_model="numpy")
    def _uniforms_from_raw_jit(raw):
        n = raw.shape[0]
        out = np.empty(n)
        s11 = np.uint64(11)
        for i in range(n):
            out[i] = (float(raw[i] >> s11) + 0.5) * _TWO_M53
        return out

    def splitmix64_raw_jit(seed, n):
        return _splitmix64_raw_jit(np.uint64(seed % 2**64), n)

    def splitmix64_uniforms_jit(seed, n):
        return _uniforms_from_raw_jit(splitmix64_raw_jit(seed, n))

    @njit(cache=True, error_model="numpy")
    def invert_panels_jit(coeffs, offsets, panel, targets, iters):
        n = targets.shape[0]
        deg = coeffs.shape[1] - 1
        out = np.empty(n)
        for i in range(n):
            p = panel[i]
            goal = targets[i] - offsets[p]
            lo = -1.0
            hi = 1.0
            for _ in range(iters):
                mid = 0.5 * (lo + hi)
                b1 = 0.0
                b2 = 0.0
                for j in range(deg, 0, -1):
                    t = 2.0 * mid * b1 - b2 + coeffs[p, j]
                    b2 = b1
                    b1 = t
                val = mid * b1 - b2 + coeffs[p, 0]
                if val < goal:
                    lo = mid
                else:
                    hi = mid
            out[i] = 0.5 * (lo + hi)
        return out

if USE_JIT:
    scale_chain = scale_chain_jit
    splitmix64_raw = splitmix64_raw_jit
    splitmix64_uniforms = splitmix64_uniforms_jit
    invert_panels = invert_panels_jit
else:
    scale_chain = scale_chain_np
    splitmix64_raw = splitmix64_raw_np
    splitmix64_uniforms = splitmix64_uniforms_np
    invert_panels = invert_panels_np
