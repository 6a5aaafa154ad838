import numpy as np
import pytest

from streamconv import (
    ConfigurationError,
    Filter,
    clamp_token,
    generate_prompted,
    generate_scratch,
    oracle_prompted,
    prefill,
)

PLACE_VALUE_FILTER = [1.0, 10.0, 100.0, 1000.0]


class TestScratch:
    def test_copy_kernel_fixes_seed(self):
        result = generate_scratch(Filter([1.0], 16), 16, "naive", seed_token=3.0)
        np.testing.assert_array_equal(result.outputs.values, np.full(16, 3.0))

    def test_delay_kernel_alternates(self):
        # y1 = 0, then the feedback u_{t+1} = y_t alternates 0,1,0,1,...
        result = generate_scratch(Filter([0.0, 1.0], 8), 8, "continuous",
                                  seed_token=1.0)
        np.testing.assert_array_equal(result.outputs.values,
                                      [0, 1, 0, 1, 0, 1, 0, 1])

    def test_engines_generate_identical_streams(self):
        rng = np.random.default_rng(6)
        taps = rng.uniform(-0.5, 0.5, 64)
        outs = {
            kind: generate_scratch(Filter(taps, 64), 64, kind,
                                   seed_token=0.7).outputs.values
            for kind in ("naive", "epoched", "continuous")
        }
        scale = 1.0 + np.max(np.abs(outs["naive"]))
        assert np.max(np.abs(outs["epoched"] - outs["naive"])) <= 1e-8 * scale
        assert np.max(np.abs(outs["continuous"] - outs["naive"])) <= 1e-8 * scale

    def test_length_beyond_context_rejected(self):
        with pytest.raises(ConfigurationError):
            generate_scratch(Filter([1.0, 0.0], 2), 3)

    def test_zero_length(self):
        assert len(generate_scratch(Filter([1.0], 4), 0)) == 0


class TestPrefill:
    def test_place_value_cache(self):
        cache = prefill([1, 2], PLACE_VALUE_FILTER, 2)
        np.testing.assert_allclose(cache.contributions.values, [12.0, 120.0],
                                   rtol=1e-12)
        assert cache.transform_calls == 1

    def test_literal_variant_is_shifted_by_one(self):
        cache = prefill([1, 2], PLACE_VALUE_FILTER, 2, literal_cache=True)
        np.testing.assert_allclose(cache.contributions.values, [120.0, 1200.0],
                                   rtol=1e-12)

    def test_empty_prompt_gives_zeros(self):
        cache = prefill([], [1, 2, 3], 3)
        np.testing.assert_array_equal(cache.contributions.values, [0, 0, 0])
        assert cache.transform_calls == 0

    def test_zero_budget_is_valid_empty(self):
        assert len(prefill([1, 2], [1, 2, 3], 0)) == 0

    def test_matches_double_loop_slice(self):
        rng = np.random.default_rng(14)
        for _ in range(25):
            p_len = int(rng.integers(1, 40))
            k = int(rng.integers(1, 40))
            p = rng.uniform(-1, 1, p_len)
            taps = rng.uniform(-1, 1, p_len + k)
            cache = prefill(p, taps, k).contributions.values
            full = np.convolve(p, taps)
            want = np.zeros(k)
            got_slice = full[p_len - 1:p_len - 1 + k]
            want[:got_slice.size] = got_slice
            np.testing.assert_allclose(cache, want, rtol=1e-10, atol=1e-12)

    def test_cache_size_is_budget_not_prompt(self):
        cache = prefill(np.ones(1000), np.ones(1100), 16)
        assert len(cache) == 16


class TestPrompted:
    def test_place_value_example(self):
        result = generate_prompted([1, 2], PLACE_VALUE_FILTER, 2)
        np.testing.assert_allclose(result.outputs.values, [12.0, 132.0],
                                   rtol=1e-12)

    def test_oracle_agrees_on_example(self):
        np.testing.assert_allclose(
            oracle_prompted([1, 2], PLACE_VALUE_FILTER, 2).values,
            [12.0, 132.0], rtol=1e-12)

    def test_budget_one_is_last_prompt_position(self):
        # single output: the full convolution of the prompt at its end
        out = oracle_prompted([1, 2], PLACE_VALUE_FILTER, 1).values
        np.testing.assert_allclose(out, [12.0])

    def test_zero_prompt_equals_scratch_from_zero(self):
        rng = np.random.default_rng(3)
        taps = rng.uniform(-1, 1, 32)
        prompted = generate_prompted(np.zeros(5), Filter(taps, 64), 16)
        scratch = generate_scratch(Filter(taps, 64), 16, "continuous",
                                   seed_token=0.0)
        np.testing.assert_allclose(prompted.outputs.values,
                                   scratch.outputs.values, atol=1e-12)

    def test_zero_budget(self):
        assert len(generate_prompted([1, 2], [1, 2, 3], 0)) == 0

    @pytest.mark.parametrize("kind", ["naive", "epoched", "continuous"])
    def test_matches_oracle_sampled_grid(self, kind):
        rng = np.random.default_rng(hash(kind) % (2 ** 32))
        for p_len in (0, 1, 3, 9, 24):
            for k in (1, 2, 7, 25):
                p = rng.uniform(-1, 1, p_len)
                taps = rng.uniform(-1, 1, p_len + k)
                want = oracle_prompted(p, taps, k).values
                got = generate_prompted(p, taps, k, kind).outputs.values
                tol = 1e-9 * (1.0 + np.max(np.abs(want)))
                assert np.max(np.abs(got - want)) <= tol

    def test_decode_memory_independent_of_prompt(self):
        k = 32
        peaks = set()
        for p_len in (64, 512, 4096):
            rng = np.random.default_rng(p_len)
            p = rng.uniform(-1, 1, p_len)
            taps = rng.uniform(-1, 1, p_len + k)
            result = generate_prompted(p, taps, k, "continuous")
            peaks.add(result.decode_peak_aux_elems)
            assert result.decode_peak_aux_elems <= 4 * k
            assert result.prefill_transform_calls == 1
        assert len(peaks) == 1  # identical for every prompt length

    def test_literal_cache_differs_from_recurrence(self):
        got = generate_prompted([1, 2], PLACE_VALUE_FILTER, 2,
                                literal_cache=True).outputs.values
        assert not np.allclose(got, [12.0, 132.0])


class TestTokenMaps:
    def test_clamp_token_bounds(self):
        clamp = clamp_token(-1.0, 1.0)
        assert clamp(0.5) == 0.5
        assert clamp(7.0) == 1.0
        assert clamp(-7.0) == -1.0

    def test_clamp_requires_ordered_bounds(self):
        with pytest.raises(ConfigurationError):
            clamp_token(1.0, -1.0)

    def test_maps_applied_identically_in_oracle_and_engine(self):
        rng = np.random.default_rng(19)
        p = rng.uniform(-1, 1, 8)
        taps = rng.uniform(-2, 2, 40)  # large taps: clamping will bite
        clamp = clamp_token()
        want = oracle_prompted(p, taps, 32, clamp).values
        got = generate_prompted(p, taps, 32, "continuous", clamp).outputs.values
        tol = 1e-9 * (1.0 + np.max(np.abs(want)))
        assert np.max(np.abs(got - want)) <= tol
