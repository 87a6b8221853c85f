import json
import math

import numpy as np
import pytest

from bbsearch.density import KDE
from bbsearch.lightning import (
    CAPACITY_UNIT,
    DEFAULT_EPSILONS,
    Channel,
    ProbeOracle,
    SnapshotError,
    SyntheticPredictorConfig,
    build_channel_prior,
    generate_predictions,
    load_snapshot,
    run_probing_comparison,
    save_snapshot,
    synthetic_snapshot,
)


class TestChannel:
    @pytest.mark.parametrize(
        "kwargs, match",
        [
            (dict(capacity=0, balance=0), "capacity"),
            (dict(capacity=100.5, balance=1), "capacity"),
            (dict(capacity=100, balance=101), "outside"),
            (dict(capacity=100, balance=-1), "outside"),
            (dict(capacity=100, balance=5, prediction_samples=(10.0, 150.0)), "prediction sample"),
        ],
    )
    def test_invariants(self, kwargs, match):
        with pytest.raises(SnapshotError, match=match):
            Channel("c", **kwargs)

    def test_proportion(self):
        assert Channel("c", 200, 50).proportion == 0.25


class TestProbeOracle:
    def test_payment_semantics(self):
        o = ProbeOracle(Channel("c", 1000, 400))
        assert o.probe(400) is True
        assert o.probe(401) is False
        assert o.sign(399) == -1 and o.sign(401) == 1
        assert o.probe_count == 4

    def test_agrees_with_sign_oracle(self):
        from bbsearch.search import SignOracle

        o, s = ProbeOracle(Channel("c", 1000, 400)), SignOracle(400)
        assert all(o(x) == s(x) for x in range(0, 1001, 7))


class TestPredictions:
    def test_deterministic_per_seed_and_id(self):
        ch = Channel("abc", 10**6, 300000)
        cfg = SyntheticPredictorConfig(seed=3)
        assert np.array_equal(generate_predictions(ch, cfg), generate_predictions(ch, cfg))
        other = Channel("abd", 10**6, 300000)
        assert not np.array_equal(generate_predictions(ch, cfg), generate_predictions(other, cfg))
        assert not np.array_equal(generate_predictions(ch, cfg), generate_predictions(ch, SyntheticPredictorConfig(seed=4)))

    def test_clipped(self):
        cfg = SyntheticPredictorConfig(noise_std_fraction=0.5, bias_fraction=0.2)
        s = generate_predictions(Channel("c", 100, 0), cfg)
        assert s.min() >= 0 and s.max() <= 100

    def test_moments(self):
        cfg = SyntheticPredictorConfig(n_trees=20000, noise_std_fraction=0.01, bias_fraction=0.1)
        s = generate_predictions(Channel("c", 10**6, 400000), cfg)
        assert len(s) == 20000
        assert s.mean() == pytest.approx(500000, abs=300)
        assert s.std() == pytest.approx(10000, rel=0.03)

    @pytest.mark.parametrize(
        "kwargs",
        [dict(noise_std_fraction=0.0), dict(noise_std_fraction=1.5), dict(bias_fraction=-1.1), dict(n_trees=1)],
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            SyntheticPredictorConfig(**kwargs)

    def test_prior_is_silverman_kde(self):
        ch = Channel("c", 1000, 500, tuple(float(x) for x in range(400, 600, 2)))
        prior = build_channel_prior(ch)
        assert isinstance(prior, KDE)
        assert prior.bandwidth == pytest.approx(1.06 * np.std(ch.prediction_samples) * 100**-0.2)


class TestSnapshotFiles:
    def test_round_trip(self, tmp_path):
        chans = synthetic_snapshot(5, seed=1, predictor=SyntheticPredictorConfig(n_trees=10))
        path = tmp_path / "snap.json"
        save_snapshot(chans, path)
        assert load_snapshot(path) == chans

    def test_missing_samples_filled(self, tmp_path):
        path = tmp_path / "snap.json"
        path.write_text(json.dumps([{"id": "x", "capacity": 1000, "balance": 10}]))
        assert load_snapshot(path)[0].prediction_samples == ()
        filled = load_snapshot(path, SyntheticPredictorConfig(n_trees=7))
        assert len(filled[0].prediction_samples) == 7

    @pytest.mark.parametrize(
        "content, match",
        [
            ("[{\"id\": \"a\", \"capacity\": 10}]", r"channel\[0\].*missing field 'balance'"),
            ("[{\"id\": \"a\", \"capacity\": 10, \"balance\": 3}, {\"id\": \"b\", \"capacity\": -4, \"balance\": 0}]", r"channel\[1\].*'b'.*capacity"),
            ("[{\"id\": \"a\", \"capacity\": 10, \"balance\": 3, \"prediction_samples\": 5}]", "must be a list"),
            ("[{\"id\": \"a\", \"capacity\": 10, \"balance\": 3}, {\"id\": \"a\", \"capacity\": 10, \"balance\": 3}]", "duplicate"),
            ("{\"id\": \"a\"}", "JSON array"),
            ("[1]", r"channel\[0\]: expected an object"),
            ("[{\"id\": \"a\",", "line 1, column"),
        ],
    )
    def test_errors_carry_context(self, tmp_path, content, match):
        path = tmp_path / "bad.json"
        path.write_text(content)
        with pytest.raises(SnapshotError, match=match):
            load_snapshot(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SnapshotError, match="cannot read"):
            load_snapshot(tmp_path / "nope.json")


class TestSyntheticSnapshot:
    def test_capacity_grid(self):
        chans = synthetic_snapshot(89, seed=0)
        assert len(chans) == 89
        for ch in chans:
            assert ch.capacity % CAPACITY_UNIT == 0
            assert 4 <= ch.capacity // CAPACITY_UNIT <= 256
            assert 0 <= ch.balance <= ch.capacity
        assert synthetic_snapshot(89, seed=0) == chans
        assert synthetic_snapshot(89, seed=1) != chans

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            synthetic_snapshot(0)


class TestComparison:
    def test_basic_mean_closed_form_on_grid_capacities(self):
        chans = synthetic_snapshot(40, seed=2)
        rep = run_probing_comparison(chans, [128])
        expected = np.mean([math.ceil(math.log2(ch.capacity / 128)) for ch in chans])
        assert rep.row(128).basic_mean == pytest.approx(expected, abs=1e-12)

    def test_closed_form_is_not_exact_off_grid(self):
        # 257 splits into widths 128 and 129, so the lower half stops one probe early
        chans = [Channel(f"c{y}", 257, y) for y in range(0, 258, 8)]
        rep = run_probing_comparison(chans, [128])
        assert rep.row(128).basic_mean < math.ceil(math.log2(257 / 128))

    def test_failures_are_recorded_and_skipped(self):
        good = synthetic_snapshot(3, seed=0)
        flat = Channel("flat", 1000, 500, (500.0,) * 10)  # zero-variance predictions
        rep = run_probing_comparison(good + [flat], [128, 256])
        assert rep.notes["n_channels"] == 3
        assert [f["id"] for f in rep.notes["failures"]] == ["flat"]
        assert rep.config["n_channels"] == 4

    def test_all_failures_raise(self):
        flat = Channel("flat", 1000, 500, (500.0,) * 10)
        with pytest.raises(ValueError):
            run_probing_comparison([flat], [128])

    def test_rejects_bad_epsilons(self):
        with pytest.raises(ValueError):
            run_probing_comparison(synthetic_snapshot(2), [0])

    def test_default_grid(self):
        assert DEFAULT_EPSILONS == (128, 256, 512, 1024, 2048, 4096, 8192, 16384)
        rep = run_probing_comparison(synthetic_snapshot(10, seed=4))
        assert [r.epsilon for r in rep.rows] == list(DEFAULT_EPSILONS)
        assert rep.notes["bracket_misses"] == 0

    def test_biased_predictor_still_brackets(self):
        cfg = SyntheticPredictorConfig(noise_std_fraction=0.02, bias_fraction=0.6, seed=1)
        rep = run_probing_comparison(synthetic_snapshot(20, seed=5), [128, 4096], cfg)
        assert rep.notes["bracket_misses"] == 0
        assert rep.notes["probe_count_mismatches"] == 0
