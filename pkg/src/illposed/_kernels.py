"""Hot inner loops, with a numba path and a pure-numpy path.

The numba path is used when numba imports and the environment variable
``ILLPOSED_NUMBA`` is not set to a false value (``0``, ``false``, ``off``,
``no``).  Both paths are always importable so tests and the benchmark can
compare them directly; the public names at the bottom of the module are
bound to whichever path is active.

The two paths agree to rounding (summation order differs), not bitwise.
"""

import os

import numpy as np

_FALSE = {"0", "false", "off", "no"}


def _numba_requested():
    return os.environ.get("ILLPOSED_NUMBA", "1").strip().lower() not in _FALSE


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


# -- pure numpy ---------------------------------------------------------------


def autoconv_stencil_numpy(c, d):
    """Two-point causal convolution stencil ``conv[i] + conv[i-1]``, truncated to len(c)."""
    n = c.shape[0]
    full = np.convolve(c, d)[:n]
    out = full.copy()
    out[1:] += full[:-1]
    return out


def autoconv_jacobian_numpy(c):
    """Lower-triangular Toeplitz matrix ``M[i, k] = c[i-k] + c[i-k-1]``."""
    n = c.shape[0]
    col = c.copy()
    col[1:] += c[:-1]
    lag = np.subtract.outer(np.arange(n), np.arange(n))
    return np.where(lag >= 0, col[np.clip(lag, 0, None)], 0.0)


def rl_matrix_numpy(alpha, n, gamma_alpha, gamma_alpha1):
    h = 1.0 / n
    lag = np.subtract.outer(np.arange(n), np.arange(n)).astype(np.float64)
    out = np.zeros((n, n))
    below = lag > 0
    out[below] = h * (lag[below] * h) ** (alpha - 1.0) / gamma_alpha
    np.fill_diagonal(out, (0.5 * h) ** alpha / gamma_alpha1)
    return out


def hausdorff_matrix_numpy(n, moments):
    h = 1.0 / n
    edges = np.arange(n + 1) * h
    j = np.arange(1, moments + 1, dtype=np.float64)[:, None]
    return (edges[None, 1:] ** j - edges[None, :-1] ** j) / j / np.sqrt(h)


# -- numba --------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def autoconv_stencil_numba(c, d):
        n = c.shape[0]
        full = np.zeros(n)
        # axpy form keeps the inner loop contiguous and vectorizable
        for j in range(n):
            cj = c[j]
            for k in range(n - j):
                full[j + k] += cj * d[k]
        out = full.copy()
        for i in range(1, n):
            out[i] += full[i - 1]
        return out

    @numba.njit(cache=True)
    def autoconv_jacobian_numba(c):
        n = c.shape[0]
        col = c.copy()
        for i in range(1, n):
            col[i] += c[i - 1]
        out = np.zeros((n, n))
        for i in range(n):
            for k in range(i + 1):
                out[i, k] = col[i - k]
        return out

    @numba.njit(cache=True)
    def rl_matrix_numba(alpha, n, gamma_alpha, gamma_alpha1):
        h = 1.0 / n
        # Toeplitz: one power per lag
        w = np.empty(n)
        w[0] = (0.5 * h) ** alpha / gamma_alpha1
        for lag in range(1, n):
            w[lag] = h * (lag * h) ** (alpha - 1.0) / gamma_alpha
        out = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1):
                out[i, j] = w[i - j]
        return out

    @numba.njit(cache=True)
    def hausdorff_matrix_numba(n, moments):
        h = 1.0 / n
        scale = 1.0 / np.sqrt(h)
        out = np.empty((moments, n))
        hi_p = np.empty(n + 1)
        for i in range(n + 1):
            hi_p[i] = i * h
        pw = hi_p.copy()
        for j in range(moments):
            # pw holds edge**(j+1)
            inv = scale / (j + 1.0)
            for i in range(n):
                out[j, i] = (pw[i + 1] - pw[i]) * inv
            for i in range(n + 1):
                pw[i] *= hi_p[i]
        return out

else:  # pragma: no cover
    autoconv_stencil_numba = autoconv_stencil_numpy
    autoconv_jacobian_numba = autoconv_jacobian_numpy
    rl_matrix_numba = rl_matrix_numpy
    hausdorff_matrix_numba = hausdorff_matrix_numpy


USE_NUMBA = HAVE_NUMBA and _numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"

if USE_NUMBA:
    autoconv_stencil = autoconv_stencil_numba
    autoconv_jacobian = autoconv_jacobian_numba
    rl_matrix = rl_matrix_numba
    hausdorff_matrix = hausdorff_matrix_numba
else:
    autoconv_stencil = autoconv_stencil_numpy
    autoconv_jacobian = autoconv_jacobian_numpy
    rl_matrix = rl_matrix_numpy
    hausdorff_matrix = hausdorff_matrix_numpy
