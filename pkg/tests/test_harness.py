import dataclasses
import json
import math

import numpy as np
import pytest

from circulaw import harness as H
from circulaw.harness import ConfigError, DegenerateInput, ExperimentAborted, ExperimentConfig
from circulaw.hermitization import TestFunction
from circulaw.quadrature import polar_disk_grid


# ---------------------------------------------------------------------------
# power-law fits
# ---------------------------------------------------------------------------


def test_fit_exact_power_law():
    fit = H.fit_power_law([(n, 3.0 * n ** -0.5) for n in (16, 64, 256, 1024)])
    assert fit.exponent == pytest.approx(-0.5, abs=1e-12)
    assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.predict(100) == pytest.approx(0.3, rel=1e-12)


def test_fit_uses_absolute_values_and_medians():
    pts = [(n, s * n ** 1.5) for n in (2, 4, 8) for s in (-1.0, 1.0, 1.0)] + [(8, 1e9)]
    assert H.fit_power_law(pts).exponent == pytest.approx(1.5, abs=1e-12)


def test_fit_noisy_recovers_exponent(rng):
    ns = np.repeat([64, 128, 256, 512, 1024], 40)
    ys = ns ** -0.75 * np.exp(0.1 * rng.normal(size=ns.size))
    fit = H.fit_power_law(list(zip(ns, ys)))
    assert fit.exponent == pytest.approx(-0.75, abs=0.05)
    assert fit.r_squared > 0.99


@pytest.mark.parametrize("pts", [
    [(1, 1.0), (2, 2.0)],
    [(1, 1.0), (1, 2.0), (2, 3.0), (2, 1.0)],
    [(1, 1.0), (2, 0.0), (3, 1.0)],
    [(0, 1.0), (2, 1.0), (3, 1.0)],
    [(1, float("nan")), (2, 1.0), (3, 1.0)],
])
def test_fit_degenerate_inputs(pts):
    with pytest.raises(DegenerateInput):
        H.fit_power_law(pts)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def base(**kw):
    d = dict(experiment="circular-law", ensemble={"family": "Rademacher"}, n_values=[8, 16],
             replicas=3, z0=[0.5, 0.1], a=0.0, seed=11)
    d.update(kw)
    return d


def test_config_json_round_trip():
    cfg = ExperimentConfig.from_dict(base(params={"backend": "lapack"}))
    again = ExperimentConfig.from_json(json.dumps(cfg.to_dict()))
    assert again == cfg
    assert cfg.z0 == 0.5 + 0.1j
    assert ExperimentConfig.from_dict(base(z0="0.5,0.1")).z0 == cfg.z0


@pytest.mark.parametrize("patch", [
    {"experiment": "nope"},
    {"n_values": []},
    {"n_values": [16, 8]},
    {"n_values": [0, 4]},
    {"replicas": 0},
    {"a": 0.7},
    {"epsilon": 1.5},
    {"format": "xml"},
    {"seed": -1},
    {"ensemble": {"family": "Cauchy"}},
    {"z0": [1, 2, 3]},
    {"bogus": 1},
])
def test_config_validation(patch):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(base(**patch))


def test_config_experiment_mismatch_and_bad_json():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(base(), experiment="extremes")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("[1, 2]")


def test_unknown_params_rejected():
    cfg = ExperimentConfig.from_dict(base(params={"mystery": 1}))
    with pytest.raises(ConfigError):
        H.run_experiment(cfg)


# ---------------------------------------------------------------------------
# workers and determinism
# ---------------------------------------------------------------------------


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv("CIRCULAW_THREADS", "3")
    assert H.worker_count() == 3
    monkeypatch.setenv("CIRCULAW_THREADS", "zero")
    with pytest.raises(ConfigError):
        H.worker_count()
    monkeypatch.delenv("CIRCULAW_THREADS")
    assert H.worker_count() >= 1


def test_ordered_map_preserves_order():
    items = list(range(50))
    assert H.ordered_map(lambda x: x * x, items, workers=4) == [x * x for x in items]


def without_timing(records):
    return [dataclasses.replace(r, wall_time_ms=0.0) for r in records]


def test_records_independent_of_thread_count(monkeypatch):
    cfg = ExperimentConfig.from_dict(base(n_values=[8, 16, 32]))
    monkeypatch.setenv("CIRCULAW_THREADS", "1")
    one = H.run_experiment(cfg)
    monkeypatch.setenv("CIRCULAW_THREADS", "4")
    four = H.run_experiment(cfg)
    assert without_timing(one.records) == without_timing(four.records)
    assert one.fits == four.fits


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("z0, a, n", [(0.0, 0.25, 16), (1.0, 0.0, 1), (0.8 + 0.3j, 0.25, 16), (1.5, 0.0, 1),
                                      (0.3, 0.0, 1)])
def test_disk_reference_against_polar_rule(z0, a, n):
    f = TestFunction(z0, a)
    g = polar_disk_grid(1500, 1024, radius=1.0)
    ref = np.sum(g.weights * f.zoomed(g.nodes, n)) / math.pi
    assert H.disk_reference(f, n) == pytest.approx(ref, abs=1e-6)


def test_disk_reference_outside_support_is_zero():
    assert H.disk_reference(TestFunction(3.0, 0.0), 1) == 0.0


def test_local_law_far_from_spectrum():
    cfg = ExperimentConfig.from_dict(dict(experiment="local-law", ensemble="GaussianReal", n_values=[64],
                                          replicas=2, z0=0.5, params={"etas": [10.0], "n_eta": 640.0}))
    res = H.run_experiment(cfg)
    vals = res.values("abs_m_minus_mc[eta=10]")
    assert vals.size == 2 and np.all(vals <= 1e-2)


def test_circular_law_summary_rows():
    res = H.run_experiment(ExperimentConfig.from_dict(base(n_values=[8, 16, 32])))
    assert res.values("envelope_ratio", 8)[0] == pytest.approx(1.0)
    assert "error_vs_n" in res.fits
    assert res.values("normalized_linear_statistic").size == 9


def test_numerical_failure_keeps_earlier_records():
    # a 1x1 Rademacher matrix equals +-1, so X - 1 is exactly singular for some seeds
    aborted = None
    for seed in range(64):
        cfg = ExperimentConfig.from_dict(dict(experiment="extremes", ensemble="Rademacher", n_values=[1],
                                              replicas=6, z0=1.0, seed=seed))
        try:
            H.run_experiment(cfg)
        except ExperimentAborted as exc:
            if len(exc.records) > 1:
                aborted = exc
                break
    else:
        pytest.fail("no seed produced a late failure")
    assert aborted.records[-1].statistic == "error:SpectrumFailure"
    assert not any(r.is_error for r in aborted.records[:-1])
    assert isinstance(aborted.cause, ArithmeticError)


def test_girko_check_size_limit():
    cfg = ExperimentConfig.from_dict(dict(experiment="girko-check", n_values=[128], replicas=1))
    with pytest.raises(ConfigError):
        H.run_experiment(cfg)


def test_girko_check_small_run():
    cfg = ExperimentConfig.from_dict(dict(experiment="girko-check", ensemble="GinibreComplex", n_values=[16],
                                          replicas=1, z0=0.3, a=0.0, params={"hs": True}))
    res = H.run_experiment(cfg)
    assert res.values("girko_rel_gap")[0] <= 1e-3
    assert res.values("hs_rel_gap")[0] <= 1e-6


def test_ginibre_stats_two_point_fit():
    cfg = ExperimentConfig.from_dict(dict(experiment="ginibre-stats", n_values=[64, 100], z0=1.0, a=0.25))
    res = H.run_experiment(cfg)
    assert res.fits["expectation_vs_n"].r_squared == 1.0
    assert res.value("variance", 100) > 0


def test_extremes_summary():
    cfg = ExperimentConfig.from_dict(dict(experiment="extremes", n_values=[32], replicas=3, z0=0.5))
    res = H.run_experiment(cfg)
    assert res.value("total_count_above_2lambda_plus", 32) == 0.0
    assert np.all(np.isfinite(res.values("log_lambda_1")))
