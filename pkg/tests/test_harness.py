import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from hermite_fields import harness
from hermite_fields.harness import ExperimentConfig, ks_distance
from hermite_fields.params import derive_exponents

samples = st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40)


def test_ks_examples():
    assert ks_distance([1.0, 2.0, 3.0], [3.0, 1.0, 2.0]) == 0.0
    assert ks_distance([0.0, 1.0], [2.0, 3.0]) == 1.0
    assert ks_distance([0.0, 1.0], [0.5, 1.5]) == 0.5
    with pytest.raises(ValueError):
        ks_distance([], [1.0])


@given(samples, samples)
def test_ks_matches_scipy(a, b):
    d = ks_distance(a, b)
    assert 0.0 <= d <= 1.0
    assert d == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)
    assert d == ks_distance(b, a)


def test_moment_summary_standard_errors(rng):
    x = rng.standard_normal(4000)
    s = harness.moment_summary(x, "x_")
    assert s["x_mean_se"] == pytest.approx(x.std(ddof=1) / math.sqrt(4000))
    assert s["x_var_se"] == pytest.approx(math.sqrt(2 / 4000), rel=0.1)
    assert abs(s["x_skew"]) <= 4 * s["x_skew_se"]


def test_config_validation():
    p = derive_exponents(2, 0.7)
    with pytest.raises(ValueError, match="replicas"):
        ExperimentConfig(p, (16,), replicas=0)
    with pytest.raises(ValueError, match="oversample"):
        ExperimentConfig(p, (16,), oversample=1)
    with pytest.raises(ValueError, match="memory cap"):
        ExperimentConfig(p, (1 << 24,))
    with pytest.raises(ValueError, match="m\\*N <= 256"):
        ExperimentConfig(p, (64,), method="kernel")
    with pytest.raises(ValueError, match="q=2, d=1"):
        ExperimentConfig(derive_exponents(2, (0.7, 0.7)), (8,), method="kernel")
    cfg = ExperimentConfig(derive_exponents(2, (0.7, 0.6)), (8, (4, 16)))
    assert cfg.N_list == ((8, 8), (4, 16))


def test_limit_experiment_small_and_reproducible(tmp_path):
    p = derive_exponents(2, 0.7)
    cfg = ExperimentConfig(p, (16, 32), oversample=4, replicas=60, root_seed=7, output_path=str(tmp_path / "r.json"))
    a = harness.run_limit_experiment(cfg)
    b = harness.run_limit_experiment(cfg)
    assert harness.report_json(a) == harness.report_json(b)
    assert (tmp_path / "r.json").read_text() == harness.report_json(a)
    assert a["H_rosenblatt"] == pytest.approx([0.7])
    assert a["reference_resolution"] == [8 * 4 * 32]
    rec = a["records"][0]
    for key in ("T_mean", "T_mean_se", "T_var", "T_var_se", "T_skew", "T_skew_se", "ks_reference"):
        assert key in rec
    assert "wall_clock_seconds" not in a
    assert "wall_clock_seconds" in harness.run_limit_experiment(cfg, timing=True)


def test_limit_experiment_worker_independent():
    cfg = ExperimentConfig(derive_exponents(2, 0.7), (16,), oversample=4, replicas=12, root_seed=3)
    par = ExperimentConfig(derive_exponents(2, 0.7), (16,), oversample=4, replicas=12, root_seed=3, workers=2)
    assert harness.report_json(harness.run_limit_experiment(cfg)) == harness.report_json(harness.run_limit_experiment(par))


def test_limit_experiment_kernel_method():
    cfg = ExperimentConfig(derive_exponents(2, 0.7), (16,), oversample=8, replicas=20, method="kernel")
    rep = harness.run_limit_experiment(cfg)
    assert rep["config"]["method"] == "kernel"


def test_limit_experiment_rejects_q1():
    with pytest.raises(ValueError, match="q1|q = 1"):
        harness.run_limit_experiment(ExperimentConfig(derive_exponents(1, 0.8), (16,), replicas=2))


def test_rosenblatt_index_equals_H_for_q2():
    assert derive_exponents(2, 0.7).H_rosenblatt == pytest.approx((0.7,))


def test_spectral_reference_has_unit_variance():
    z = harness.rosenblatt_reference((0.7, 0.7), (128, 128), 3000, 1)
    assert abs(np.mean(z)) <= 4 * np.std(z) / math.sqrt(z.size)
    assert abs(np.mean(z * z) - 1) <= 4 * np.std(z * z) / math.sqrt(z.size)
    assert stats.skew(z) > 0.5


def test_spectral_and_field_references_agree_in_law():
    a = harness.rosenblatt_reference(0.7, 1024, 1500, 2, method="spectral")
    b = harness.rosenblatt_reference(0.7, 1024, 1500, 3, method="field")
    assert ks_distance(a, b) <= 0.06


def test_q1_regression_small():
    cfg = ExperimentConfig(derive_exponents(1, 0.75), (256,), oversample=2, replicas=50)
    rep = harness.run_q1_regression(cfg)
    rec = rep["records"][0]
    assert rec["regime"] == "boundary" and rec["passed"] is None
    with pytest.raises(ValueError):
        harness.run_q1_regression(ExperimentConfig(derive_exponents(2, 0.7), (16,), replicas=2))


def test_q1_statistic_scalings():
    V = np.array([0.1])
    assert harness.q1_statistic(V, 100, 0.6)[0][0] == pytest.approx(100 * 0.1 / 10)
    assert harness.q1_statistic(V, 100, 0.9)[0][0] == pytest.approx(100 * 0.1 * 100 ** (1 - 1.8))
    assert harness.q1_statistic(V, 100, 0.75)[1] == "(N log N)^-1/2"


def test_selftest_deterministic():
    a = harness.selftest(5)
    assert a["passed"]
    assert harness.report_json(a) == harness.report_json(harness.selftest(5))
    assert harness.report_csv(a) == harness.report_csv(harness.selftest(5))


def test_csv_format():
    text = harness.rows_csv([{"a": 1, "b": np.float64(0.5)}, {"a": 2, "c": "x"}])
    assert text.splitlines() == ["a,b,c", "1,0.5,", "2,,x"]
    json.loads(harness.report_json({"x": [1.0, 2.0]}))
