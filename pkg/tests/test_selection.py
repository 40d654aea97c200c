"""Forward selection scoring and the end-to-end pipeline."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beliefsel.dataset import Dataset, FeatureKind
from beliefsel.errors import DataError
from beliefsel.estimation import WeightVector
from beliefsel.redundancy import RedundancyTable
from beliefsel.selection import (RankingResult, SelectorConfig, minmax_normalize,
                                 run_belief, sfs)


def wvec(*values):
    return WeightVector(values=np.array(values, dtype=float), method="test")


def red_table(n, pairs):
    values = {(min(i, j), max(i, j)): v for (i, j), v in pairs.items()}
    lo = min(0.0, min(values.values(), default=0.0))
    hi = max(0.0, max(values.values(), default=0.0))
    return RedundancyTable(n_features=n, values=values, lo=lo, hi=hi)


def gaussian_classes(seed, m=120, n=8, shifts=(2.0, 1.5, 1.2)):
    """Binary data with a few mean-shifted columns, the rest pure noise."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, m)
    y[:2] = [0, 1]
    X = rng.standard_normal((m, n))
    for j, delta in enumerate(shifts):
        X[:, j] += delta * y
    return Dataset(X, y, [FeatureKind.NUMERIC] * n)


class TestMinmax:
    def test_unit_interval_and_endpoints(self):
        out = minmax_normalize(np.array([2.0, 4.0, 8.0]))
        assert out.tolist() == [0.0, pytest.approx(1.0 / 3.0), 1.0]

    def test_constant_vector_maps_to_zero(self):
        assert minmax_normalize(np.full(4, 3.3)).tolist() == [0.0] * 4

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.1, 50), st.floats(-20, 20))
    def test_affine_invariance(self, scale, shift):
        values = np.array([-1.0, 0.25, 2.0, 0.5])
        base = minmax_normalize(values)
        moved = minmax_normalize(values * scale + shift)
        np.testing.assert_allclose(moved, base, atol=1e-9)


class TestSfs:
    def test_zero_theta_is_weight_order(self):
        res = sfs(wvec(0.1, 0.9, 0.5, 0.7), None, 3, theta=0.0)
        assert res.selected_features() == [1, 3, 2]

    def test_ties_break_toward_lower_index(self):
        res = sfs(wvec(0.5, 0.5, 0.5), None, 3, theta=0.0)
        assert res.selected_features() == [0, 1, 2]

    def test_penalty_defers_a_duplicate(self):
        # Features 0 and 1 are interchangeable (max redundancy); a distinct
        # feature at 60% strength overtakes the twin at rank 2.
        weights = wvec(1.0, 1.0, 0.6, 0.0)
        red = red_table(4, {(0, 1): 1.0, (0, 2): 0.1, (1, 2): 0.1})
        res = sfs(weights, red, 3, theta=0.5)
        assert res.selected_features() == [0, 2, 1]

    def test_zero_theta_ignores_redundancy_table(self):
        weights = wvec(1.0, 1.0, 0.6)
        red = red_table(3, {(0, 1): 1.0})
        assert sfs(weights, red, 2, theta=0.0).selected_features() == [0, 1]

    def test_matches_full_rescoring_oracle(self):
        # The incremental penalty must equal recomputing the whole sum.
        rng = np.random.default_rng(77)
        for _ in range(10):
            n = 9
            weights = WeightVector(rng.standard_normal(n), "test")
            pairs = {}
            for i in range(n):
                for j in range(i + 1, n):
                    if rng.random() < 0.6:
                        pairs[(i, j)] = float(rng.uniform(-0.2, 1.0))
            red = red_table(n, pairs)
            theta = float(rng.uniform(0.1, 1.0))
            got = sfs(weights, red, 6, theta=theta)

            wn = minmax_normalize(weights.values)
            chosen = []
            remaining = set(range(n))
            for _ in range(6):
                scored = []
                for i in sorted(remaining):
                    pen = sum(red.normalized(j, i) for j in chosen)
                    scored.append((-(wn[i] - theta * pen), i))
                best = min(scored)[1]
                chosen.append(best)
                remaining.discard(best)
            assert got.selected_features() == chosen

    def test_reported_score_decomposition(self):
        weights = wvec(1.0, 0.8, 0.2)
        red = red_table(3, {(0, 1): 1.0})
        res = sfs(weights, red, 2, theta=0.5)
        second = res.selected[1]
        assert second.feature == 1
        assert second.score == pytest.approx(
            second.normalized_weight - 0.5 * second.penalty)
        assert res.selected[0].penalty == 0.0

    def test_selection_size_bounds(self):
        with pytest.raises(DataError):
            sfs(wvec(1.0, 2.0), None, 0)
        with pytest.raises(DataError):
            sfs(wvec(1.0, 2.0), None, 3)


class TestRunBelief:
    def test_finds_planted_features_and_reports_metadata(self):
        ds = gaussian_classes(0)
        res = run_belief(ds, SelectorConfig(n_select=3, theta=0.0))
        assert sorted(res.selected_features()) == [0, 1, 2]
        md = res.metadata
        assert md["n_instances"] == 120 and md["n_features"] == 8
        assert md["sample_size"] == 120
        assert md["locator_records"] > 0
        assert md["locator_bytes"] == md["locator_records"] * 16
        for key in ("normalize_s", "sample_s", "search_s", "estimate_s",
                    "redundancy_s", "select_s"):
            assert key in md["timings"]

    def test_deterministic_repeat_runs_are_bit_identical(self):
        ds = gaussian_classes(1)
        cfg = SelectorConfig(n_select=4, partitions=3, sample_rate=0.5, seed=11,
                             deterministic=True)
        a = run_belief(ds, cfg)
        b = run_belief(ds, cfg)
        assert np.array_equal(a.weights.values, b.weights.values)
        assert a.selected_features() == b.selected_features()

    def test_default_repeat_runs_agree_to_addition_order(self):
        # Partials fold as threads finish, so only near-equality is promised.
        ds = gaussian_classes(1)
        cfg = SelectorConfig(n_select=4, partitions=3, sample_rate=0.5, seed=11)
        a = run_belief(ds, cfg)
        b = run_belief(ds, cfg)
        np.testing.assert_allclose(a.weights.values, b.weights.values,
                                   atol=1e-9, rtol=0)
        assert a.selected_features() == b.selected_features()

    def test_zero_theta_skips_collision_tracking(self):
        ds = gaussian_classes(2)
        res = run_belief(ds, SelectorConfig(n_select=3, theta=0.0))
        assert res.metadata["timings"]["redundancy_s"] == pytest.approx(0.0, abs=1e-4)

    def test_batch_split_leaves_weights_unchanged(self):
        ds = gaussian_classes(3, m=90)
        one = run_belief(ds, SelectorConfig(n_select=4, batches=1, theta=0.5))
        four = run_belief(ds, SelectorConfig(n_select=4, batches=4, theta=0.5))
        np.testing.assert_allclose(one.weights.values, four.weights.values,
                                   atol=1e-9, rtol=0)
        assert one.selected_features() == four.selected_features()

    def test_window_excludes_untracked_pairs_not_weights(self):
        ds = gaussian_classes(4)
        wide = run_belief(ds, SelectorConfig(n_select=2, eta=4.0))
        narrow = run_belief(ds, SelectorConfig(n_select=2, eta=0.5))
        np.testing.assert_allclose(wide.weights.values, narrow.weights.values,
                                   atol=1e-12)

    def test_threshold_reports_strong_features(self):
        ds = gaussian_classes(5)
        res = run_belief(ds, SelectorConfig(n_select=3, theta=0.0, threshold=0.5))
        above = res.metadata["above_threshold"]
        assert 0 in above
        assert all(minmax_normalize(res.weights.values)[j] > 0.5 for j in above)

    def test_selection_size_validated_before_work(self):
        ds = gaussian_classes(6, m=30)
        with pytest.raises(DataError):
            run_belief(ds, SelectorConfig(n_select=99))


class TestRankingResult:
    def test_json_and_text_forms(self):
        res = sfs(wvec(0.2, 0.8), None, 2, theta=0.0)
        obj = res.to_json_obj()
        assert [s["feature"] for s in obj["selected"]] == [1, 0]
        assert obj["method"] == "test"
        text = res.to_text()
        assert text.splitlines()[0].startswith("1\t")
