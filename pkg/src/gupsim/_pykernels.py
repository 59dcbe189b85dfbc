"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``."""
import numpy as np

# rows of the (nx, nk) phase matrix built per block
_BLOCK_ELEMENTS = 1 << 20


def direct_sum(k, weights, x):
    """out[j] = sum_m weights[m] * exp(i k[m] x[j])."""
    k = np.ascontiguousarray(k, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=complex)
    x = np.ascontiguousarray(x, dtype=float)
    out = np.empty(x.shape[0], dtype=complex)
    rows = max(1, _BLOCK_ELEMENTS // max(1, k.shape[0]))
    for start in range(0, x.shape[0], rows):
        xb = x[start:start + rows]
        out[start:start + rows] = np.exp(1j * np.outer(xb, k)) @ weights
    return out


def leapfrog(prev, cur, n_steps, c2, c4, c0):
    a = np.array(prev, dtype=complex)
    b = np.array(cur, dtype=complex)
    if b.shape[0] < 5:
        raise ValueError("leapfrog needs at least 5 grid points")
    for _ in range(n_steps):
        bp1 = np.roll(b, -1)
        bm1 = np.roll(b, 1)
        lap = bp1 - 2.0 * b + bm1
        bih = np.roll(b, -2) - 4.0 * bp1 + 6.0 * b - 4.0 * bm1 + np.roll(b, 2)
        a, b = b, 2.0 * b - a + c2 * lap + c4 * bih + c0 * b
    return a, b
