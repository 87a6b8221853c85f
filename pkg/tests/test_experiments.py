import csv
import io
import json
import math

import numpy as np
import pytest

from bbsearch.density import Exponential, GaussianMixture, KlShiftSpec, Normal, Uniform, fit_kde
from bbsearch.experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentReport,
    compare_steps,
    draw_targets,
    make_bounds,
    percent_decrease,
    preset,
    run_comparison,
    run_kld_drift,
)


class TestBounds:
    def test_normal(self):
        assert make_bounds(Normal(0, 10000)) == (-42000, 42000)
        assert make_bounds(Normal(5, 1.15)) == (0, 10)

    def test_exponential_tail(self):
        # -10000 * ln(1e-5) = 115129.25
        assert make_bounds(Exponential(10000), tail_mass=1e-5) == (0, 115130)
        assert make_bounds(Exponential(10000), tail_mass=1e-4) == (0, math.ceil(10000 * math.log(1e4)))

    def test_mixture_uses_extreme_components(self):
        mix = GaussianMixture.bimodal(0, 1000, 4000, 1000, 0.5)
        assert make_bounds(mix, 2.9) == (-2900, 6900)
        assert make_bounds(mix) == (-4200, 8200)

    def test_uniform_support(self):
        assert make_bounds(Uniform(-0.5, 9.2)) == (-1, 10)

    def test_bad_multiplier(self):
        with pytest.raises(ValueError):
            make_bounds(Normal(0, 1), 0)


class TestTargets:
    def test_seeded_and_inside(self):
        a, _ = draw_targets(Normal(0, 100), 1000, 3, (-50, 50))
        b, redraws = draw_targets(Normal(0, 100), 1000, 3, (-50, 50))
        assert np.array_equal(a, b)
        assert a.dtype == np.int64
        assert a.min() >= -50 and a.max() <= 50
        assert redraws > 0

    def test_floor_applied(self):
        t, _ = draw_targets(Uniform(0, 1), 50, 0, (0, 1))
        assert set(t.tolist()) == {0}

    def test_impossible_bounds(self):
        with pytest.raises(ValueError):
            draw_targets(Normal(0, 1), 10, 0, (1000, 1001))


def test_percent_decrease():
    assert percent_decrease(10.0, 9.0) == pytest.approx(10.0)
    assert percent_decrease(10.0, 11.0) == pytest.approx(-10.0)
    assert percent_decrease(0.0, 0.0) == 0.0


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(epsilons=()),
            dict(epsilons=(0, 1)),
            dict(epsilons=(4, 2)),
            dict(n_targets=0),
            dict(prior="bogus"),
        ],
    )
    def test_rejects(self, kwargs):
        base = dict(distribution=Normal(0, 1), n_targets=10, epsilons=(1,))
        base.update(kwargs)
        with pytest.raises(ValueError):
            ExperimentConfig(**base)

    @pytest.mark.parametrize(
        "prior",
        ["true", "uniform", KlShiftSpec(0, 1000, 0.3), Normal(5, 7), fit_kde([1.0, 2.0, 5.0], 0.5)],
    )
    def test_round_trip(self, prior):
        cfg = ExperimentConfig(Normal(0, 1000), 20, (1, 2, 8), seed=4, prior=prior, bounds=(-100, 100))
        again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again.to_dict() == cfg.to_dict()

    def test_missing_field(self):
        with pytest.raises(ValueError, match="n_targets"):
            ExperimentConfig.from_dict({"distribution": {"kind": "normal", "mu": 0, "sigma": 1}, "epsilons": [1]})

    def test_priors_resolve(self):
        cfg = ExperimentConfig(Normal(0, 1000), 5, (1,), prior="uniform")
        assert cfg.resolved_prior() == Uniform(-4200, 4200)
        cfg = ExperimentConfig(Normal(0, 1000), 5, (1,), prior=KlShiftSpec(0, 1000, 0.5))
        assert cfg.resolved_prior() == Normal(1000.0, 1000.0)


@pytest.fixture(scope="module")
def small_report():
    return run_comparison(preset("normal-small", n_targets=300, epsilons=(1, 2, 5, 16)))


class TestReport:
    def test_rows(self, small_report):
        assert small_report.columns == CSV_COLUMNS
        assert [r.epsilon for r in small_report.rows] == [1, 2, 5, 16]
        r = small_report.row(1)
        assert r.percent_decrease == pytest.approx(percent_decrease(r.basic_mean, r.bbs_mean))
        assert r.bbs_mean < r.basic_mean

    def test_csv_layout(self, small_report):
        text = small_report.to_csv()
        assert text.splitlines()[0] == "epsilon,percent_decrease,basic_mean,basic_std,bbs_mean,bbs_std"
        assert len(text.splitlines()) == 5

    def test_csv_and_json_agree(self, small_report):
        rows = list(csv.DictReader(io.StringIO(small_report.to_csv())))
        data = json.loads(small_report.to_json())
        assert data["columns"] == list(CSV_COLUMNS)
        for c_row, j_row in zip(rows, data["rows"]):
            for col in CSV_COLUMNS:
                assert float(c_row[col]) == j_row[col]

    def test_json_round_trip(self, small_report):
        again = ExperimentReport.from_dict(json.loads(small_report.to_json()))
        assert again == small_report
        assert again.to_csv() == small_report.to_csv()

    def test_std_is_population(self):
        rep = run_comparison(ExperimentConfig(Normal(0, 50), 40, (1,), seed=2))
        t, _ = draw_targets(Normal(0, 50), 40, 2, make_bounds(Normal(0, 50)))
        basic, bbs, _ = compare_steps(-210, 210, t, (1,), Normal(0, 50))[1]
        assert rep.row(1).basic_std == pytest.approx(float(np.std(basic)))
        assert rep.row(1).bbs_std == pytest.approx(float(np.std(bbs)))

    def test_table(self, small_report):
        table = small_report.format_table()
        assert table.splitlines()[1].split()[0] == "1"
        assert "%" in table

    def test_notes(self, small_report):
        assert small_report.notes["bounds"] == [-420, 420]
        assert small_report.notes["backend"] in ("numba", "numpy")


def test_uniform_prior_gives_zero_decrease():
    rep = run_comparison(ExperimentConfig(Normal(0, 1000), 300, (1, 3, 10), prior="uniform"))
    for r in rep.rows:
        assert r.bbs_mean == r.basic_mean and r.percent_decrease == 0.0


def test_backends_give_identical_reports():
    cfg = preset("bimodal", n_targets=200, epsilons=(1, 7, 20))
    a = run_comparison(cfg, backend="numba")
    b = run_comparison(cfg, backend="numpy")
    assert a.rows == b.rows


def test_seed_changes_results():
    a = run_comparison(preset("normal", n_targets=100, epsilons=(1,), seed=1))
    b = run_comparison(preset("normal", n_targets=100, epsilons=(1,), seed=2))
    assert a.rows != b.rows


class TestKlDrift:
    def test_rows_and_shared_baseline(self):
        rep = run_kld_drift(0, 1000, 10, 200, [0.0, 0.3, 0.9], seed=0)
        assert rep.columns == ("divergence",) + CSV_COLUMNS
        assert [r.divergence for r in rep.rows] == [0.0, 0.3, 0.9]
        assert len({r.basic_mean for r in rep.rows}) == 1
        assert rep.rows[0].basic_mean == 10.0
        assert rep.rows[0].divergence == 0.0

    def test_zero_divergence_equals_true_prior(self):
        rep = run_kld_drift(0, 1000, 10, 200, [0.0], seed=5)
        ref = run_comparison(ExperimentConfig(Normal(0, 1000), 200, (10,), seed=5))
        assert rep.rows[0].bbs_mean == ref.rows[0].bbs_mean

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            run_kld_drift(0, 1000, 10, 20, [0.1, -0.2], seed=0)

    def test_csv_has_divergence_first(self):
        rep = run_kld_drift(0, 1000, 10, 50, [0.0, 0.5], seed=0)
        assert rep.to_csv().splitlines()[0].startswith("divergence,epsilon,")


def test_presets():
    with pytest.raises(ValueError):
        preset("cauchy")
    cfg = preset("exponential")
    assert cfg.epsilons == tuple(range(1, 33))
    assert cfg.resolved_bounds() == (0, 115130)
    assert preset("bimodal").resolved_bounds() == (-2900, 6900)
