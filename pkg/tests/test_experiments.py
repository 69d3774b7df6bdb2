import numpy as np
import pytest
from pydantic import ValidationError

from vrjplab.experiments import (
    ExperimentConfig,
    aux_stream,
    default_config,
    resolve_seed,
    rng_streams,
    run_experiment,
    stream_fingerprint,
)
from vrjplab.experiments.config import FIGURE1_RHOS, representative_site


class TestRngStreams:
    def test_identical_inputs_identical_draws(self):
        a = rng_streams(42, 3).random(1000)
        b = rng_streams(42, 3).random(1000)
        assert np.array_equal(a, b)

    def test_replica_streams_uncorrelated(self):
        x = rng_streams(42, 0).random(10_000)
        y = rng_streams(42, 1).random(10_000)
        r = np.corrcoef(x, y)[0, 1]
        assert abs(r) < 3.0 / np.sqrt(10_000)

    def test_fingerprint_stable(self):
        assert stream_fingerprint(7, 0) == stream_fingerprint(7, 0)
        assert stream_fingerprint(7, 0) != stream_fingerprint(7, 1)

    def test_seed_zero_reserved(self):
        assert resolve_seed(123) == 123
        drawn = {resolve_seed(0) for _ in range(4)}
        assert 0 not in drawn and len(drawn) == 4

    def test_aux_stream_disjoint_from_replicas(self):
        a = aux_stream(42, "ward-vertices").random(100)
        b = rng_streams(42, 0).random(100)
        assert not np.array_equal(a, b)
        assert np.array_equal(a, aux_stream(42, "ward-vertices").random(100))


class TestConfig:
    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(experiment="gamma_law", bogus=3)

    def test_range_validation(self):
        for field, value in (("rho", 1.0), ("wbar", 0.0), ("s", 0.5), ("replicas", 0)):
            with pytest.raises(ValidationError):
                ExperimentConfig(experiment="gamma_law", **{field: value})

    def test_q_exponent_needs_critical_rho(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(experiment="gamma_law", rho=4.0, q_exponent=1)
        ExperimentConfig(experiment="gamma_law", rho=2.0, q_exponent=1)

    def test_defaults_per_experiment(self):
        assert default_config("figure1").n == 10
        assert default_config("ward").rho == pytest.approx(1.4)
        with pytest.raises(ValueError):
            default_config("nonsense")

    def test_representative_sites(self):
        from vrjplab import hier_distance

        assert representative_site(0) == 1
        for k in range(1, 11):
            assert hier_distance(1, representative_site(k)) == k


class TestRunExperiment:
    def test_bit_exact_reproducibility_across_workers(self):
        base = default_config("gamma_law", n=3, replicas=120, seed=5)
        rec1 = run_experiment(base)
        rec2 = run_experiment(base.model_copy(update={"workers": 2}))
        vals1 = [(r.statistic, r.value) for r in rec1.rows]
        vals2 = [(r.statistic, r.value) for r in rec2.rows]
        assert vals1 == vals2
        assert rec1.replica_seeds == rec2.replica_seeds

    def test_entropy_seed_recorded(self):
        rec = run_experiment(default_config("gamma_law", n=2, replicas=30, seed=0))
        assert rec.resolved_seed != 0
        assert rec.config.seed == 0

    def test_ward_rows(self):
        rec = run_experiment(default_config("ward", n=3, replicas=200, seed=6))
        stats = {r.statistic for r in rec.rows}
        assert {"exp_u_mean", "exp_u_mom", "max_abs_z"} <= stats
        vertex_rows = [r for r in rec.rows if r.statistic == "exp_u_mean"]
        assert len(vertex_rows) == 8  # 2^3 sites, capped at 10

    def test_coarse_check_rows(self):
        rec = run_experiment(default_config("coarse_check", n=3, replicas=250, seed=6))
        pvals = {r.vertex_or_scale: r.value for r in rec.rows if r.statistic == "ks_pvalue"}
        assert set(pvals) == {"0", "1", "2"}
        assert all(p > 1e-4 for p in pvals.values())

    def test_decay_slope_rows(self):
        rec = run_experiment(default_config("decay_slope", n=4, replicas=60, seed=6))
        stats = {r.statistic for r in rec.rows}
        assert {"frac_moment", "slope", "slope_deep", "slope_target", "slope_ratio"} <= stats
        target = [r for r in rec.rows if r.statistic == "slope_target"][0].value
        assert target == pytest.approx(-0.25 * np.log(8.0))

    def test_figure1_sweeps_three_bases(self):
        rec = run_experiment(default_config("figure1", n=4, replicas=16, seed=6))
        rhos = {r.rho for r in rec.rows if r.statistic == "frac_moment"}
        assert rhos == set(FIGURE1_RHOS)
        anchor = [
            r for r in rec.rows
            if r.statistic == "frac_moment" and r.vertex_or_scale == "0"
        ]
        assert all(r.value == 1.0 for r in anchor)

    def test_figure1_subcritical_series_decays(self):
        rec = run_experiment(default_config("figure1", n=5, replicas=40, seed=6))
        series = {
            rho: [
                r.value
                for r in sorted(
                    (
                        r for r in rec.rows
                        if r.statistic == "frac_moment" and r.rho == rho
                    ),
                    key=lambda r: int(r.vertex_or_scale),
                )
            ]
            for rho in FIGURE1_RHOS
        }
        assert series[4.0][-1] < series[4.0][0]
        # smaller decay base: visibly slower decay at the deepest scale
        assert series[4.0][-1] < series[2.0][-1] < series[1.4][-1]

    def test_transience_scan_stats(self):
        rec = run_experiment(
            default_config("transience_scan", n=4, replicas=50, seed=6)
        )
        stats = {r.statistic for r in rec.rows}
        assert {"escape_median", "log_median_slope", "min_over_first"} <= stats

    def test_all_replicas_failing_raises(self):
        from vrjplab.errors import VrjplabError

        config = default_config("gamma_law", n=40, replicas=4, seed=6)
        with pytest.raises(VrjplabError):
            run_experiment(config)

    def test_bounds_table_has_constants(self):
        rec = run_experiment(default_config("bounds_table", n=4, seed=6))
        stats = {r.statistic for r in rec.rows}
        assert {"cs_pow_s", "cs_pow_s_quadrature", "cs_pow_s_tail_integral",
                "c_wbar_s", "wbar_threshold", "product_bound"} <= stats
