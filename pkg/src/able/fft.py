"""Unitary radix-2 FFT on raw numpy arrays.

Both directions carry a 1/sqrt(N) factor per transformed axis, so the
transform is its own conjugate inverse and the plain (unweighted) sum of
squared moduli is preserved exactly. Extents must be powers of two; the
iterative decimation-in-time butterflies are vectorized over all leading
axes, so batched transforms cost one pass per stage regardless of batch
size.
"""

from functools import lru_cache

import numpy as np

from .errors import UnsupportedSizeError


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@lru_cache(maxsize=None)
def _bit_reversal(n: int) -> np.ndarray:
    rev = np.zeros(n, dtype=np.intp)
    for i in range(1, n):
        rev[i] = rev[i >> 1] >> 1
        if i & 1:
            rev[i] |= n >> 1
    return rev


@lru_cache(maxsize=None)
def _twiddles(m: int, sign: int) -> np.ndarray:
    half = m >> 1
    return np.exp(sign * 2j * np.pi * np.arange(half) / m)


def _fft_last_axis(a: np.ndarray, sign: int) -> np.ndarray:
    n = a.shape[-1]
    if not is_power_of_two(n):
        raise UnsupportedSizeError(f"transform length {n} is not a power of two")
    out = np.ascontiguousarray(a[..., _bit_reversal(n)], dtype=np.complex128)
    m = 2
    while m <= n:
        half = m >> 1
        tw = _twiddles(m, sign)
        v = out.reshape(out.shape[:-1] + (n // m, m))
        even = v[..., :half]
        odd = v[..., half:]
        t = odd * tw
        odd[...] = even - t
        even[...] += t
        m <<= 1
    out *= 1.0 / np.sqrt(n)
    return out


def _transform(a: np.ndarray, axes, sign: int) -> np.ndarray:
    out = np.asarray(a, dtype=np.complex128)
    for ax in axes:
        out = np.moveaxis(_fft_last_axis(np.moveaxis(out, ax, -1), sign), -1, ax)
    return out


def fft_unitary(a: np.ndarray, axes) -> np.ndarray:
    """Forward unitary DFT along `axes` (1/sqrt(N) normalization each)."""
    return _transform(a, axes, -1)


def ifft_unitary(a: np.ndarray, axes) -> np.ndarray:
    """Inverse unitary DFT along `axes`; exact adjoint of fft_unitary."""
    return _transform(a, axes, +1)
