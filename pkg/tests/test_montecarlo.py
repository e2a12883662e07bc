import math

import numpy as np
import pytest

from uplink_rsma.exceptions import InvalidParameterError
from uplink_rsma.mcs import PRESETS
from uplink_rsma.montecarlo import (
    ExperimentSpec, RateStatistics, ccdf_csv, empirical_meta, format_float, interval_probability,
    run_experiment, simulate_success_tables, statistics_csv,
)
from uplink_rsma.sinr import SystemConfig
from uplink_rsma.spatial import Window

SMALL = dict(n_topologies=40, n_fading=300, master_seed=7)


def test_worker_count_does_not_change_tables():
    thr = PRESETS["S4"].theta
    one = simulate_success_tables(SystemConfig(), thr, 12, 200, 3, betas=[0.0, 0.5], workers=1)
    two = simulate_success_tables(SystemConfig(), thr, 12, 200, 3, betas=[0.0, 0.5], workers=2)
    assert np.array_equal(one.success, two.success)
    assert np.array_equal(one.shannon, two.shannon)
    assert one.discarded == two.discarded


def test_rsma_zero_split_matches_noma_with_shared_seeds():
    spec = ExperimentSpec(cfg=SystemConfig(beta=0.0, q=0.7), scheme=PRESETS["S3"], **SMALL)
    rsma = run_experiment(spec)[0]
    noma = run_experiment(ExperimentSpec(cfg=SystemConfig(beta=0.0), scheme=PRESETS["S3"],
                                         access="noma", **SMALL))[0]
    assert np.array_equal(rsma.samples, noma.samples)


def test_beta_sweep_single_pass_equals_pointwise_runs():
    sweep = (("beta", (0.2, 0.8)),)
    batched = run_experiment(ExperimentSpec(sweep=sweep, **SMALL))
    for stats, beta in zip(batched, (0.2, 0.8)):
        alone = run_experiment(ExperimentSpec(cfg=SystemConfig(beta=beta), **SMALL))[0]
        assert np.array_equal(stats.samples, alone.samples)


def test_independent_streams_per_point():
    sweep = (("beta", (0.3, 0.3)),)
    crn = run_experiment(ExperimentSpec(sweep=sweep, **SMALL))
    ind = run_experiment(ExperimentSpec(sweep=sweep, common_random_numbers=False, **SMALL))
    assert np.array_equal(crn[0].samples, crn[1].samples)
    assert not np.array_equal(ind[0].samples, ind[1].samples)


def test_oma_requires_single_user():
    with pytest.raises(InvalidParameterError):
        ExperimentSpec(access="oma")
    stats = run_experiment(ExperimentSpec(cfg=SystemConfig(N=1), access="oma", **SMALL))[0]
    assert stats.samples.shape == (40, 1)


def test_spec_validation():
    with pytest.raises(InvalidParameterError):
        ExperimentSpec(sweep=(("gamma", (1,)),))
    with pytest.raises(InvalidParameterError):
        ExperimentSpec(sweep=(("beta", ()),))
    with pytest.raises(InvalidParameterError):
        ExperimentSpec(n_topologies=0)


def test_threshold_sweep_and_plain_window():
    spec = ExperimentSpec(sweep=(("thresholds", ((-15.0,), (-5.0,))),),
                          window=Window(1000.0, wraparound=False), **SMALL)
    low, high = run_experiment(spec)
    assert np.all(low.mean >= high.mean)
    assert "thresholds" in statistics_csv([low]).splitlines()[1]


def test_empirical_meta_trivial_cases():
    assert empirical_meta(np.zeros(200), [0.0, 0.1]).tolist() == [0.0, 0.0]
    assert empirical_meta(np.full(200, 0.4), [0.0, 0.39, 0.4]).tolist() == [1.0, 1.0, 0.0]
    with pytest.warns(RuntimeWarning):
        empirical_meta([0.1, 0.2], [0.15])
    with pytest.raises(InvalidParameterError):
        empirical_meta([], [0.1])


def test_interval_probability_conserves_mass():
    rng = np.random.default_rng(0)
    samples = rng.uniform(0, 1, 5000)
    grid = np.linspace(0, 1, 101)
    ccdf = empirical_meta(samples, grid)
    edges = np.arange(0.1, 1.0001, 0.1)
    parts = interval_probability((grid, ccdf), edges, 0.1)
    assert parts.sum() == pytest.approx(1.0 - ccdf[-1] - (1.0 - ccdf[0]), abs=1e-12)
    uniform = interval_probability(lambda x: 1 - np.clip(x, 0, 1), 0.5, 0.2)
    assert uniform == pytest.approx(0.2)
    with pytest.raises(InvalidParameterError):
        interval_probability(lambda x: x, 0.5, 0.0)


def test_statistics_and_csv_format():
    samples = np.array([[0.1, 0.0], [0.3, 0.2]])
    stats = RateStatistics(samples, np.array([0.0, 0.2]), "beta", 0.5)
    assert stats.mean == pytest.approx([0.2, 0.1])
    assert stats.var == pytest.approx([0.01, 0.01])
    text = statistics_csv([stats])
    assert text.splitlines()[0] == "sweep_param,sweep_value,rank,mean,m2,var,stderr"
    assert text.splitlines()[1].startswith("beta,0.5,1,0.2,")
    assert ccdf_csv([stats]).splitlines()[1:3] == ["beta,0.5,0,1,1", "beta,0.5,0.2,1,0.5"]
    assert format_float(1 / 3) == "0.333333333333"


@pytest.mark.slow
def test_ranks_order_and_bounds(full_tables):
    tables, _ = full_tables
    s1 = PRESETS["S1"]
    for k in (0, 5, 10):
        crr = tables.crr(s1, k)
        assert np.all((crr >= 0) & (crr <= 2 * s1.max_rate + 1e-12))
        mean = crr.mean(axis=0)
        assert mean[0] > mean[1]


@pytest.mark.slow
def test_stderr_shrinks_as_inverse_square_root(full_tables):
    tables, _ = full_tables
    crr = tables.crr(PRESETS["S1"], 5)
    sizes = np.array([100, 1000, 10_000])
    errs = [RateStatistics(crr[:m], np.zeros(1)).stderr[0] for m in sizes]
    slope = np.polyfit(np.log(sizes), np.log(errs), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)
    assert tables.discard_rate < 0.05
