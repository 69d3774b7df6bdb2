import numpy as np
import pytest

from vrjplab.robust import group_se, median_of_means, mom_estimate


def test_median_of_means_constant_data():
    assert median_of_means(np.full(40, 2.5)) == 2.5


def test_mom_estimate_fields():
    rng = np.random.default_rng(3)
    values = rng.exponential(size=400)
    est = mom_estimate(values)
    assert est.n == 400
    assert est.ci_lo <= est.estimate <= est.ci_hi
    assert est.se_mean == pytest.approx(values.std(ddof=1) / 20.0)


def test_mom_estimate_deterministic():
    rng = np.random.default_rng(9)
    values = rng.pareto(2.5, size=300)
    a, b = mom_estimate(values), mom_estimate(values)
    assert a == b


def test_mom_constant_has_zero_width():
    est = mom_estimate(np.ones(32))
    assert est.estimate == est.ci_lo == est.ci_hi == 1.0
    assert est.robust_se == 0.0


def test_mom_resists_outliers():
    values = np.ones(80)
    values[0] = 1e6
    assert median_of_means(values) < 10.0


def test_group_se_matches_plain_se_for_iid():
    rng = np.random.default_rng(11)
    values = rng.normal(size=8000)
    plain = values.std(ddof=1) / np.sqrt(len(values))
    assert group_se(values) == pytest.approx(plain, rel=0.6)


def test_group_se_degenerate():
    assert group_se(np.array([1.0])) == 0.0


def test_mom_empty_rejected():
    with pytest.raises(ValueError):
        mom_estimate(np.array([]))
