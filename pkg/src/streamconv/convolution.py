"""Stateless convolution primitives sharing one index convention.

Three operations do all the arithmetic in this package:

* :func:`conv_causal_reference` -- the quadratic direct-summation
  oracle for causal convolution. Never used on a fast path.
* :func:`conv_full` -- full linear convolution through a fast
  transform, padded to the next power of two.
* :func:`futurefill` -- the contribution of an already-seen prefix to
  output positions strictly after it ends, obtained as a slice of one
  full convolution.

Contracts below use 1-based positions; arrays are 0-based.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as _fft

from .signal import ArrayLike, Filter, Signal, as_filter, as_signal

# Fast/slow agreement budget for double-precision transforms: the
# elementwise error of the fast path against direct summation is
# bounded by TOLERANCE_SCALE * (1 + max |direct|) for lengths <= 2**14.
TOLERANCE_SCALE = 1e-9

# Outputs at or below this length are convolved directly (C loop via
# numpy); the transform path wins only above it. Constant-bounded, so
# the O(n log n) contract of the fast path is unaffected.
_DIRECT_CUTOFF = 64

_fast_conv_calls = 0


def transform_calls() -> int:
    """Total number of fast full-convolution calls made so far.

    Each :func:`conv_full` / :func:`futurefill` invocation counts as
    one call regardless of the internal method chosen for its size.
    """
    return _fast_conv_calls


def next_pow2(n: int) -> int:
    """Smallest power of two >= n (n >= 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 1 << (n - 1).bit_length()


def _fast_full_values(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full linear convolution of two 1-d float64 arrays.

    Pads to the next power of two and multiplies real transforms;
    small outputs fall back to the direct method.
    """
    global _fast_conv_calls
    _fast_conv_calls += 1
    la, lb = a.size, b.size
    if la == 0 or lb == 0:
        return np.zeros(0)
    n_out = la + lb - 1
    if n_out <= _DIRECT_CUTOFF:
        return np.convolve(a, b)
    n_fft = next_pow2(n_out)
    spec = _fft.rfft(a, n_fft)
    spec *= _fft.rfft(b, n_fft)
    return _fft.irfft(spec, n_fft)[:n_out]


def conv_causal_reference(u: ArrayLike, phi: Filter | ArrayLike) -> Signal:
    """Causal convolution by direct summation (the oracle).

    Output position ``s`` equals ``sum_{i=1}^{s} u_i * phi_{s+1-i}``
    with taps zero-read beyond the stored kernel. Theta(len(u)^2);
    intentionally independent of the transform-based fast path.
    """
    u = as_signal(u)
    phi = as_filter(phi)
    uv = u.values
    taps = phi.taps_array()
    n, m = uv.size, taps.size
    out = np.zeros(n)
    if m:
        # reversed taps so each position is one contiguous dot product
        rtaps = taps[::-1].copy()
        for s in range(1, n + 1):
            w = s if s < m else m
            out[s - 1] = np.dot(uv[s - w:s], rtaps[m - w:])
    return Signal(out)


def conv_full(a: ArrayLike, b: ArrayLike) -> Signal:
    """Full linear convolution, length ``len(a) + len(b) - 1``.

    Position ``s`` equals ``sum_i a_i * b_{s+1-i}`` over all valid
    ``i``. Empty if either operand is empty. Agrees with direct
    summation within ``TOLERANCE_SCALE * (1 + max |direct|)``.
    """
    a = as_signal(a)
    b = as_signal(b)
    return Signal(_fast_full_values(a.values, b.values))


def futurefill(v: ArrayLike, w: ArrayLike) -> Signal:
    """Contribution of all of ``v`` to positions strictly after it.

    With ``t1 = len(v)`` and ``t2 = len(w)``, the result has length
    ``t2 - 1`` and its position ``s`` equals
    ``sum_{i=1}^{t2-s} v_{t1-i+1} * w_{s+i}`` -- equivalently the
    1-based positions ``t1+1 .. t1+t2-1`` of ``conv_full(v, w)``.
    Computed as one fast full convolution plus a slice,
    O((t1+t2) log (t1+t2)). Empty when ``t2 <= 1``.
    """
    v = as_signal(v)
    w = as_signal(w)
    t1, t2 = len(v), len(w)
    if t2 <= 1:
        return Signal(np.zeros(0))
    if t1 == 0:
        return Signal(np.zeros(t2 - 1))
    full = _fast_full_values(v.values, w.values)
    return Signal(full[t1:t1 + t2 - 1])


def _futurefill_direct(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """O(t1*t2) summation of the futurefill definition (test oracle)."""
    t1, t2 = v.size, w.size
    out = np.zeros(max(t2 - 1, 0))
    for s in range(1, t2):
        acc = 0.0
        for i in range(1, t2 - s + 1):
            vi = t1 - i + 1
            if 1 <= vi <= t1:
                acc += v[vi - 1] * w[s + i - 1]
        out[s - 1] = acc
    return out


def split_check(a: ArrayLike, b: ArrayLike, t1: int) -> bool:
    """Check the split identity for the convolution of equal-length vectors.

    For every position ``s <= t1`` the prefix convolution reproduces
    ``[a*b]_s``, and for every ``s > t1`` the suffix convolution plus
    the prefix's futurefill reproduces it. Used as the test-support
    realization of the split proposition; returns True iff both hold
    within the fast/slow tolerance.
    """
    a = as_signal(a)
    b = as_signal(b)
    n = len(a)
    if len(b) != n:
        raise ValueError("split_check requires len(a) == len(b)")
    if not 1 <= t1 <= n:
        raise ValueError(f"split index {t1} outside [1, {n}]")

    whole = conv_causal_reference(a, Filter(b, n)).values
    tol = TOLERANCE_SCALE * (1.0 + float(np.max(np.abs(whole))))

    prefix = conv_causal_reference(a.values[:t1], Filter(b.values[:t1], t1)).values
    if np.max(np.abs(prefix - whole[:t1])) > tol:
        return False

    if t1 == n:
        return True
    suffix = conv_causal_reference(
        a.values[t1:], Filter(b.values[:n - t1], n - t1)
    ).values
    fill = futurefill(a.values[:t1], b).values[:n - t1]
    return bool(np.max(np.abs(suffix + fill - whole[t1:])) <= tol)
