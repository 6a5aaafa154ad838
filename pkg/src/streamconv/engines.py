"""Streaming engines for online causal convolution.

Each engine consumes one input sample per step and emits the causal
convolution output for that step: after pushing ``u_1 .. u_t`` the
t-th returned value equals ``conv_causal_reference(u_{1:t}, phi)_t``.
The filter is fully known up front; only the input streams.

Three interchangeable implementations trade compute for memory:

* :class:`NaiveEngine` -- a direct inner product per step. Total
  work is quadratic in the horizon; no auxiliary state at all.
* :class:`EpochedEngine` -- a K-slot cache of precomputed future
  contributions, rebuilt every K steps from one fast convolution.
* :class:`ContinuousEngine` -- a horizon-sized cache updated on a
  power-of-two schedule; each slot is complete by the time it is
  read, giving quasilinear total work.

Every engine carries a :class:`CostMeter` whose counters are exact
integers, deterministic for a given input length and configuration
(they never depend on the sample values). Wall-clock measurement is
the benchmark CLI's job, not the meters'.

The push methods are deliberately flat: they run once per generated
token, so attribute traffic and tiny-array dispatch dominate the
wall-clock of the sub-quadratic engines at practical sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy import dot as _dot

from .convolution import _fast_full_values, next_pow2
from .errors import CacheWriteError, ConfigurationError, HorizonError
from .signal import ArrayLike, Filter, as_filter

ENGINE_KINDS = ("naive", "epoched", "continuous")


@dataclass
class CostMeter:
    """Deterministic instrumentation counters.

    mac_count
        Scalar multiply-adds charged by direct inner products, at the
        nominal cost of the method (position index per step for the
        naive method, epoch phase per step for the epoched one).
    ff_cost
        Accumulated fast-convolution charge: ``(1 v k) * 2**k`` per
        step for the schedule-driven engine; padded transform length
        times its log2 per cache rebuild otherwise.
    cache_rebuilds
        Number of completed cache rebuilds.
    peak_aux_elems
        Peak count of float elements held between steps beyond the
        inputs and the filter (cache slots). Transient scratch inside
        a single transform call is not auxiliary state and does not
        count.
    """

    mac_count: int = 0
    ff_cost: int = 0
    cache_rebuilds: int = 0
    peak_aux_elems: int = 0

    def snapshot(self) -> "CostMeter":
        return replace(self)

    def as_dict(self) -> dict:
        return {
            "mac_count": self.mac_count,
            "ff_cost": self.ff_cost,
            "cache_rebuilds": self.cache_rebuilds,
            "peak_aux_elems": self.peak_aux_elems,
        }


def k_of_t(t: int, b: int) -> int:
    """Exponent of the largest power of two dividing ``t``, capped at ``b``.

    Zero for odd ``t``; ``t`` must be >= 1.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    trailing = (t & -t).bit_length() - 1
    return trailing if trailing < b else b


def optimal_epoch_length(horizon: int) -> int:
    """Epoch length minimizing total epoched work: round(sqrt(L log2 L)).

    Requires ``horizon >= 2``.
    """
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    return int(math.sqrt(horizon * math.log2(horizon)) + 0.5)


class OnlineConvEngine:
    """Common state and contract for the streaming engines.

    A single instance is single-owner mutable state: never push to one
    instance from two threads. Distinct instances are independent.
    """

    __slots__ = (
        "filter", "horizon", "_taps", "_rtaps", "_ntaps", "_buf", "_t",
        "_mac", "_ff", "_rebuilds", "_peak",
    )

    kind = "abstract"

    def __init__(self, phi: Filter | ArrayLike, horizon: int):
        horizon = int(horizon)
        if horizon < 1:
            raise ConfigurationError("horizon must be a positive integer")
        self.filter = as_filter(phi)
        self.horizon = horizon
        taps = self.filter.taps_array()
        self._taps = taps
        self._ntaps = taps.size
        self._rtaps = taps[::-1].copy() if taps.size else taps
        self._buf = np.zeros(horizon)
        self._t = 0
        self._mac = 0
        self._ff = 0
        self._rebuilds = 0
        self._peak = 0

    @property
    def steps(self) -> int:
        """Number of samples pushed so far."""
        return self._t

    @property
    def meter(self) -> CostMeter:
        return CostMeter(self._mac, self._ff, self._rebuilds, self._peak)

    def push(self, sample: float) -> float:
        raise NotImplementedError

    def push_many(self, samples) -> np.ndarray:
        out = np.empty(len(samples))
        push = self.push
        for i, x in enumerate(samples):
            out[i] = push(x)
        return out

    def reset(self) -> None:
        self._buf[:] = 0.0
        self._t = 0
        self._mac = self._ff = self._rebuilds = 0


class NaiveEngine(OnlineConvEngine):
    """Direct inner product at each step.

    No auxiliary memory beyond the inputs and the filter; total work
    over a full horizon of L pushes is L(L+1)/2 multiply-adds.
    """

    __slots__ = ()

    kind = "naive"

    def push(self, sample: float) -> float:
        t = self._t
        if t >= self.horizon:
            raise HorizonError(f"push {t + 1} exceeds declared horizon {self.horizon}")
        buf = self._buf
        buf[t] = sample
        t += 1
        self._t = t
        self._mac += t
        m = self._ntaps
        if m == 0:
            return 0.0
        if t <= m:
            return _dot(buf[:t], self._rtaps[m - t:])
        return _dot(buf[t - m:t], self._rtaps)


class EpochedEngine(OnlineConvEngine):
    """Cache the next K future contributions, rebuilding every K steps.

    The step output is a length-tau inner product over the current
    epoch plus one cached slot. When the phase tau wraps, the cache is
    repopulated with the first K entries of the future contribution of
    everything seen so far, obtained from one fast full convolution
    (or, when K is small enough that direct evaluation of those K
    entries is cheaper than the transform, computed directly -- the
    values are identical and ff_cost is charged at the nominal
    transform cost either way).
    """

    __slots__ = ("epoch_len", "_tau", "_cache")

    kind = "epoched"

    def __init__(self, phi: Filter | ArrayLike, horizon: int, epoch_len: int | None = None):
        super().__init__(phi, horizon)
        if epoch_len is None:
            epoch_len = optimal_epoch_length(horizon) if horizon >= 2 else 1
        epoch_len = int(epoch_len)
        if epoch_len < 1:
            raise ConfigurationError("epoch length must be >= 1")
        self.epoch_len = epoch_len
        self._tau = 1
        self._cache = np.zeros(epoch_len)
        self._peak = epoch_len

    @property
    def cache(self) -> np.ndarray:
        """Copy of the current cache (slot s at index s-1)."""
        return self._cache.copy()

    def reset(self) -> None:
        super().reset()
        self._tau = 1
        self._cache[:] = 0.0
        self._peak = self.epoch_len

    def push(self, sample: float) -> float:
        t = self._t
        if t >= self.horizon:
            raise HorizonError(f"push {t + 1} exceeds declared horizon {self.horizon}")
        buf = self._buf
        buf[t] = sample
        t += 1
        self._t = t
        tau = self._tau
        m = self._ntaps
        w = tau if tau < m else m
        acc = self._cache[tau - 1]
        if w:
            acc += _dot(buf[t - w:t], self._rtaps[m - w:])
        self._mac += tau
        if tau == self.epoch_len:
            self._rebuild(t)
            self._tau = 1
        else:
            self._tau = tau + 1
        return acc

    def _rebuild(self, t: int) -> None:
        """Refill the cache with future positions t+1 .. t+K of [u*phi]."""
        k = self.epoch_len
        taps = self._taps
        w_len = min(t + k, taps.size)
        n_lin = max(1, t + w_len - 1)
        n_fft = next_pow2(n_lin)
        self._ff += n_fft * (n_fft.bit_length() - 1)  # n * log2(n)
        self._rebuilds += 1
        cache = self._cache
        cache[:] = 0.0
        if w_len < 2:
            return
        if k * min(t, w_len) <= 3 * n_fft * (n_fft.bit_length() - 1):
            # direct evaluation of the K future positions
            buf = self._buf
            rt = taps[:w_len][::-1].copy()
            n_entries = min(k, w_len - 1)
            for s in range(1, n_entries + 1):
                lo = max(0, t + s - w_len)
                start = w_len - t - s + lo
                cache[s - 1] = _dot(buf[lo:t], rt[start:start + t - lo])
        else:
            fill = _fast_full_values(self._buf[:t], taps[:w_len])[t:t + w_len - 1]
            n_entries = min(k, fill.size)
            cache[:n_entries] = fill[:n_entries]


class ContinuousEngine(OnlineConvEngine):
    """Schedule-driven cache covering the whole horizon.

    Step t outputs ``C_t + u_t * phi_1``, then pre-computes the
    contribution of the last ``2**k(t)`` inputs to the next ``2**k(t)``
    outputs, where k(t) is the number of trailing zero bits of t
    (capped at floor(log2 horizon)). Writes past the horizon are
    truncated. Each cache slot is complete before the step that reads
    it; a guard raises :class:`CacheWriteError` if an update would
    ever touch an already-consumed slot.

    The two smallest update sizes (every odd step and half of the even
    ones) are evaluated with scalar arithmetic; they write the same
    values as the general transform path at fixed offsets t+1 and t+2,
    both strictly ahead of the consumed watermark.
    """

    __slots__ = ("b", "_cache", "_tap0", "_tap1", "_tap2", "_tap3")

    kind = "continuous"

    def __init__(self, phi: Filter | ArrayLike, horizon: int):
        super().__init__(phi, horizon)
        self.b = horizon.bit_length() - 1  # floor(log2 horizon)
        self._cache = np.zeros(horizon)
        taps = self._taps
        pad = [float(taps[i]) if i < taps.size else 0.0 for i in range(4)]
        self._tap0, self._tap1, self._tap2, self._tap3 = pad
        self._peak = horizon

    @property
    def cache(self) -> np.ndarray:
        """Copy of the current cache (slot s at index s-1)."""
        return self._cache.copy()

    def reset(self) -> None:
        super().reset()
        self._cache[:] = 0.0
        self._peak = self.horizon

    def push(self, sample: float) -> float:
        t = self._t
        horizon = self.horizon
        if t >= horizon:
            raise HorizonError(f"push {t + 1} exceeds declared horizon {horizon}")
        buf = self._buf
        buf[t] = sample
        t += 1
        self._t = t
        cache = self._cache
        out = cache[t - 1] + sample * self._tap0
        self._mac += 1

        trailing = (t & -t).bit_length() - 1
        b = self.b
        k = trailing if trailing < b else b
        self._ff += (k if k else 1) << k  # (1 v k) * 2**k

        if t < horizon:
            # slots 1..t are consumed; every write below starts at slot
            # t+1, the scalar branches by construction and the general
            # branch behind an explicit guard
            if k == 0:
                # future slice of [u_t] against taps 2..2: one term
                cache[t] += sample * self._tap1
            elif k == 1:
                # last two inputs against taps 2..4: two slots ahead
                prev = buf[t - 2]
                cache[t] += sample * self._tap1 + prev * self._tap2
                if t + 1 < horizon:
                    cache[t + 1] += sample * self._tap2 + prev * self._tap3
            else:
                m = 1 << k
                w_len = min(2 * m, self._ntaps)
                if w_len >= 2:
                    write_slot = t + 1  # 1-based start of the update range
                    if write_slot <= self._t:
                        raise CacheWriteError(
                            f"cache update at step {t} would touch consumed "
                            f"slot {write_slot}"
                        )
                    fill = _fast_full_values(buf[t - m:t], self._taps[:w_len])[m:]
                    n_write = min(m, horizon - t, fill.size)
                    cache[t:t + n_write] += fill[:n_write]
        return out


def make_engine(
    kind: str,
    phi: Filter | ArrayLike,
    horizon: int,
    epoch_len: int | None = None,
) -> OnlineConvEngine:
    """Build an engine by kind name ("naive", "epoched", "continuous")."""
    if kind == "naive":
        return NaiveEngine(phi, horizon)
    if kind == "epoched":
        return EpochedEngine(phi, horizon, epoch_len)
    if kind == "continuous":
        return ContinuousEngine(phi, horizon)
    raise ConfigurationError(
        f"unknown engine kind {kind!r}; expected one of {ENGINE_KINDS}"
    )
