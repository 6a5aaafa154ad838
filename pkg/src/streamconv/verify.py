"""Self-verification suites behind ``streamconv verify``.

Every suite checks a fast path against an independent slow oracle or
an exact combinatorial identity. Random instances are derived
deterministically from the given seed, so two runs with the same seed
produce identical reports (wall_ns aside). A failing suite serializes
the offending instance (parameters, derived seed, and the data itself
when small) so it can be replayed.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import convolution as conv
from .engines import (
    ContinuousEngine,
    EpochedEngine,
    NaiveEngine,
    k_of_t,
    optimal_epoch_length,
)
from .generate import generate_prompted, oracle_prompted
from .rng import stream_seed
from .signal import Filter
from .spectral import StuModel, hankel_entry, ogd_spectral_step, spectral_filters

DEFAULT_MAX_L = 4096


@dataclass
class SuiteResult:
    name: str
    passed: bool
    instances: int
    max_error: float
    failures: list = field(default_factory=list)
    wall_ns: int = 0

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "instances": self.instances,
            "max_error": self.max_error,
            "failures": self.failures,
            "wall_ns": self.wall_ns,
        }


def _rng(seed: int, *parts) -> np.random.Generator:
    return np.random.default_rng(stream_seed(seed, *parts))


def _fail(failures, limit=8, **info):
    if len(failures) < limit:
        failures.append(info)


def _serialize(arr: np.ndarray, cap: int = 128):
    return [float(v) for v in arr[:cap]] + (["..."] if arr.size > cap else [])


def suite_futurefill(seed: int, max_l: int, instances: int = 400) -> SuiteResult:
    """Future-slice values vs direct summation and the full-conv slice."""
    started = time.perf_counter_ns()
    failures = []
    max_err = 0.0
    count = 0
    rng = _rng(seed, 1)
    cap = min(max_l, 256)
    for idx in range(instances):
        t1 = int(rng.integers(0, cap + 1))
        t2 = int(rng.integers(1, cap + 1))
        v = rng.uniform(-1, 1, t1)
        w = rng.uniform(-1, 1, t2)
        got = conv.futurefill(v, w).values
        direct = conv._futurefill_direct(v, w)
        slice_oracle = np.convolve(v, w)[t1:t1 + t2 - 1] if t1 and t2 > 1 else direct
        scale = 1.0 + (float(np.max(np.abs(direct))) if direct.size else 0.0)
        err = float(np.max(np.abs(got - direct))) / scale if direct.size else 0.0
        err_slice = (
            float(np.max(np.abs(got - slice_oracle))) / scale if direct.size else 0.0
        )
        err = max(err, err_slice)
        max_err = max(max_err, err)
        count += 1
        if err > 1e-10 or got.size != max(t2 - 1, 0):
            _fail(failures, case=idx, t1=t1, t2=t2, error=err,
                  v=_serialize(v), w=_serialize(w))
    return SuiteResult("futurefill", not failures, count, max_err,
                       failures, time.perf_counter_ns() - started)


def suite_proposition_split(seed: int, max_l: int) -> SuiteResult:
    """Split identity: exhaustive at small lengths, randomized at max_l."""
    started = time.perf_counter_ns()
    failures = []
    count = 0
    rng = _rng(seed, 2)
    for n in range(1, 33):
        a = rng.uniform(-1, 1, n)
        b = rng.uniform(-1, 1, n)
        for t1 in range(1, n + 1):
            count += 1
            if not conv.split_check(a, b, t1):
                _fail(failures, n=n, t1=t1, a=_serialize(a), b=_serialize(b))
    n = min(max_l, 4096)
    a = rng.uniform(-1, 1, n)
    b = rng.uniform(-1, 1, n)
    for t1 in sorted(set(int(x) for x in rng.integers(1, n + 1, 16))):
        count += 1
        if not conv.split_check(a, b, t1):
            _fail(failures, n=n, t1=t1)
    return SuiteResult("proposition_split", not failures, count, 0.0,
                       failures, time.perf_counter_ns() - started)


def _oracle_outputs(u: np.ndarray, taps: np.ndarray) -> np.ndarray:
    return conv.conv_causal_reference(u, Filter(taps, max(1, u.size, taps.size))).values


def suite_oracle_equivalence(seed: int, max_l: int) -> SuiteResult:
    """All engines vs the direct-summation oracle."""
    started = time.perf_counter_ns()
    failures = []
    max_err = 0.0
    count = 0
    rng = _rng(seed, 3)

    def check(u, taps, engines, tag):
        nonlocal max_err, count
        ref = _oracle_outputs(u, taps)
        tol = 1e-8 * (1.0 + (float(np.max(np.abs(ref))) if ref.size else 0.0))
        for eng in engines:
            got = eng.push_many(u)
            err = float(np.max(np.abs(got - ref))) if ref.size else 0.0
            max_err = max(max_err, err)
            count += 1
            if err > tol:
                _fail(failures, tag=tag, engine=eng.kind, L=u.size, error=err,
                      u=_serialize(u), taps=_serialize(taps))

    for length in range(1, 49):
        u = rng.uniform(-1, 1, length)
        taps = rng.uniform(-1, 1, length)
        epochs = sorted({1, optimal_epoch_length(length) if length >= 2 else 1, length})
        engines = [NaiveEngine(taps, length), ContinuousEngine(taps, length)]
        engines += [EpochedEngine(taps, length, k) for k in epochs]
        check(u, taps, engines, "exhaustive")

    for length in sorted({max(2, max_l // 4), max(2, max_l // 2), max(2, max_l)}):
        for rep in range(2):
            u = rng.uniform(-1, 1, length)
            taps = rng.uniform(-1, 1, length)
            engines = [
                NaiveEngine(taps, length),
                ContinuousEngine(taps, length),
                EpochedEngine(taps, length, optimal_epoch_length(length)),
            ]
            check(u, taps, engines, "random")
    return SuiteResult("oracle_equivalence", not failures, count, max_err,
                       failures, time.perf_counter_ns() - started)


def suite_cache_lemma(seed: int, max_l: int) -> SuiteResult:
    """No cache slot changes after the step that consumed it."""
    started = time.perf_counter_ns()
    failures = []
    count = 0
    rng = _rng(seed, 4)
    for length in (64, 100, 256, min(512, max_l)):
        u = rng.uniform(-1, 1, length)
        taps = rng.uniform(-1, 1, length)
        eng = ContinuousEngine(taps, length)
        frozen = np.empty(length)
        for t in range(length):
            eng.push(u[t])
            cache = eng.cache
            frozen[t] = cache[t]
            # slots consumed so far must still hold their frozen values
            if t and not np.array_equal(cache[:t], frozen[:t]):
                _fail(failures, L=length, step=t + 1)
            count += 1
    return SuiteResult("cache_lemma", not failures, count, 0.0,
                       failures, time.perf_counter_ns() - started)


def suite_cost_bounds(seed: int, max_l: int) -> SuiteResult:
    """Exact counter identities and the quasilinear cost bound."""
    started = time.perf_counter_ns()
    failures = []
    count = 0

    for length in (15, 64, 100, 257, min(1024, max_l)):
        zeros = np.zeros(length)
        taps = np.ones(length)
        naive = NaiveEngine(taps, length)
        naive.push_many(zeros)
        count += 1
        if naive.meter.mac_count != length * (length + 1) // 2:
            _fail(failures, check="naive_mac", L=length, got=naive.meter.mac_count)

        k = optimal_epoch_length(length)
        epoched = EpochedEngine(taps, length, k)
        epoched.push_many(zeros)
        count += 1
        if epoched.meter.cache_rebuilds != length // k:
            _fail(failures, check="rebuilds", L=length, K=k,
                  got=epoched.meter.cache_rebuilds)
        if epoched.meter.peak_aux_elems > 4 * k:
            _fail(failures, check="epoched_aux", L=length, K=k,
                  got=epoched.meter.peak_aux_elems)

    length = 2
    while length <= max_l:
        taps = np.ones(length)
        eng = ContinuousEngine(taps, length)
        eng.push_many(np.zeros(length))
        b = length.bit_length() - 1
        expected = 0
        for t in range(1, length + 1):
            k = k_of_t(t, b)
            expected += (k if k else 1) << k
        bound = 3 * length * b * b
        count += 1
        if eng.meter.ff_cost != expected:
            _fail(failures, check="ff_cost_sum", L=length,
                  got=eng.meter.ff_cost, expected=expected)
        if eng.meter.ff_cost > bound:
            _fail(failures, check="ff_cost_bound", L=length,
                  got=eng.meter.ff_cost, bound=bound)
        length *= 4
    return SuiteResult("cost_bounds", not failures, count, 0.0,
                       failures, time.perf_counter_ns() - started)


def suite_prompted_oracle(seed: int, max_l: int) -> SuiteResult:
    """Prompted generation vs the direct recurrence oracle."""
    started = time.perf_counter_ns()
    failures = []
    max_err = 0.0
    count = 0
    rng = _rng(seed, 5)
    for p_len in range(0, 25, 3):
        for k in range(1, 25, 3):
            p = rng.uniform(-1, 1, p_len)
            taps = rng.uniform(-1, 1, p_len + k)
            want = oracle_prompted(p, taps, k).values
            tol = 1e-8 * (1.0 + float(np.max(np.abs(want))))
            for kind in ("naive", "epoched", "continuous"):
                got = generate_prompted(p, taps, k, kind).outputs.values
                err = float(np.max(np.abs(got - want)))
                max_err = max(max_err, err)
                count += 1
                if err > tol:
                    _fail(failures, L_prompt=p_len, K=k, engine=kind, error=err,
                          p=_serialize(p), taps=_serialize(taps))
    # cache size stays pinned to the budget as the prompt grows
    k = 64
    for p_len in (256, 1024, min(4096, max_l)):
        p = rng.uniform(-1, 1, p_len)
        taps = rng.uniform(-1, 1, p_len + k)
        result = generate_prompted(p, taps, k, "continuous")
        count += 1
        if result.decode_peak_aux_elems > 4 * k:
            _fail(failures, check="decode_aux", L_prompt=p_len, K=k,
                  got=result.decode_peak_aux_elems)
        if result.prefill_transform_calls != 1:
            _fail(failures, check="prefill_calls", L_prompt=p_len, K=k,
                  got=result.prefill_transform_calls)
    return SuiteResult("prompted_oracle", not failures, count, max_err,
                       failures, time.perf_counter_ns() - started)


def suite_hankel(seed: int, max_l: int) -> SuiteResult:
    """Closed-form entries vs quadrature; bank orthonormality."""
    started = time.perf_counter_ns()
    failures = []
    max_err = 0.0
    count = 0
    for n in range(2, 65):
        integral, _ = quad(lambda a: (a - 1.0) ** 2 * a ** (n - 2), 0.0, 1.0,
                           epsabs=1e-14, epsrel=1e-14)
        err = abs(hankel_entry(1, n - 1) - integral)
        max_err = max(max_err, err)
        count += 1
        if err > 1e-12:
            _fail(failures, check="quadrature", n=n, error=err)

    bank = spectral_filters(64, 8)
    gram = bank.filters.T @ bank.filters
    ortho_err = float(np.max(np.abs(gram - np.eye(8))))
    max_err = max(max_err, ortho_err)
    count += 1
    if ortho_err > 1e-8:
        _fail(failures, check="orthonormal", error=ortho_err)
    vals = bank.eigenvalues
    count += 1
    if np.any(vals < 0) or np.any(np.diff(vals) > 0):
        _fail(failures, check="eigenvalue_order", values=_serialize(vals))
    return SuiteResult("hankel", not failures, count, max_err,
                       failures, time.perf_counter_ns() - started)


def suite_gradient(seed: int, max_l: int) -> SuiteResult:
    """Analytic projection gradient vs central finite differences."""
    started = time.perf_counter_ns()
    failures = []
    max_err = 0.0
    count = 0
    rng = _rng(seed, 6)
    d, k, length, steps = 3, 2, 16, 6
    bank = spectral_filters(length, k)
    for rep in range(3):
        proj = rng.standard_normal((k, d, d)) * 0.3
        us = rng.uniform(-1, 1, (steps, d))
        ys = rng.uniform(-1, 1, (steps, d))

        # analytic gradient of the final step's loss
        model = StuModel(bank, projections=proj.copy(), engine_kind="naive",
                         max_steps=steps)
        for t in range(steps - 1):
            model.step(us[t])
        y_hat = model.step(us[-1])
        feats = model.last_features
        residual = y_hat - ys[-1]
        eps = 1e-6
        analytic_all = []
        for i in range(k):
            analytic = 2.0 * np.outer(residual, feats[i])
            analytic_all.append(analytic)
            numeric = np.empty_like(analytic)
            for r in range(d):
                for c in range(d):
                    up = proj.copy(); up[i, r, c] += eps
                    dn = proj.copy(); dn[i, r, c] -= eps
                    lp = _final_step_loss(bank, up, us, ys, steps)
                    lm = _final_step_loss(bank, dn, us, ys, steps)
                    numeric[r, c] = (lp - lm) / (2 * eps)
            scale = max(1.0, float(np.max(np.abs(numeric))))
            err = float(np.max(np.abs(analytic - numeric))) / scale
            max_err = max(max_err, err)
            count += 1
            if err > 1e-5:
                _fail(failures, rep=rep, filter=i, error=err)

        # the shipped update must apply exactly -lr * analytic gradient
        lr = 0.05
        fresh = StuModel(bank, projections=proj.copy(), engine_kind="naive",
                         max_steps=steps)
        for t in range(steps - 1):
            fresh.step(us[t])
        ogd_spectral_step(fresh, us[-1], ys[-1], lr)
        count += 1
        for i in range(k):
            want = proj[i] - lr * analytic_all[i]
            if not np.allclose(fresh.projections[i], want, atol=1e-12):
                _fail(failures, rep=rep, check="update_rule", filter=i)
    return SuiteResult("gradient", not failures, count, max_err,
                       failures, time.perf_counter_ns() - started)


def _final_step_loss(bank, proj, us, ys, steps):
    model = StuModel(bank, projections=proj, engine_kind="naive", max_steps=steps)
    for t in range(steps - 1):
        model.step(us[t])
    r = model.step(us[-1]) - ys[-1]
    return float(r @ r)


ALL_SUITES = (
    suite_oracle_equivalence,
    suite_futurefill,
    suite_proposition_split,
    suite_cache_lemma,
    suite_cost_bounds,
    suite_prompted_oracle,
    suite_hankel,
    suite_gradient,
)


def run_all(seed: int = 0, max_l: int = DEFAULT_MAX_L) -> list[SuiteResult]:
    return [suite(seed, max_l) for suite in ALL_SUITES]


def report(results: list[SuiteResult], seed: int, max_l: int) -> dict:
    return {
        "seed": seed,
        "max_L": max_l,
        "all_passed": all(r.passed for r in results),
        "suites": [r.as_dict() for r in results],
    }


def report_json(results: list[SuiteResult], seed: int, max_l: int) -> str:
    return json.dumps(report(results, seed, max_l), sort_keys=True, indent=2)
