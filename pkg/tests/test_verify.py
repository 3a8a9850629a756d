import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from locspec.curves import CoefficientCurve
from locspec.process import TvArmaModel
from locspec.verify import (
    ConfigError,
    McConfig,
    exceedance_curve,
    fit_log_slope,
    log_abs_mgf,
    max_bound_constant,
    run,
    run_replications,
)

AR05 = {"alpha": [-0.5]}
COS = {"kind": "cosine", "lag": 1}
CONST = {"kind": "constant"}


def cfg(workers=1, **kw):
    base = {"experiment": "clt", "model": AR05, "n": [128], "R": 200, "seed": 1, "functionals": [COS]}
    base.update(kw)
    return McConfig.from_dict(base, workers=workers)


def report_json(c):
    return json.dumps(run(c).to_dict(), sort_keys=True)


# -- configuration ----------------------------------------------------------


@pytest.mark.parametrize(
    "bad",
    [
        {"R": 1},
        {"n": [256, 128]},
        {"n": [128, 128]},
        {"n": []},
        {"tolerances": {"se_multiple": -1.0}},
        {"tolerances": {"se_multiple": 0.0}},
        {"functionals": []},
        {"experiment": "speed"},
        {"functionals": [{"kind": "wavelet"}]},
        {"chunk": 0},
    ],
)
def test_config_invariants(bad):
    with pytest.raises(ConfigError):
        cfg(**bad)


def test_tail_needs_single_functional():
    with pytest.raises(ConfigError):
        cfg(experiment="tail", functionals=[COS, CONST])


def test_config_echo_round_trip():
    c = cfg(taper={"kind": "cosine", "ramp": 0.3})
    again = McConfig.from_dict(c.to_dict())
    assert again.to_dict() == c.to_dict()


# -- determinism ------------------------------------------------------------


def test_report_identical_across_runs_and_workers():
    a = report_json(cfg(R=130, chunk=20))
    b = report_json(cfg(R=130, chunk=20))
    c = report_json(cfg(R=130, chunk=20, workers=4))
    assert a == b == c


def test_chunking_does_not_change_replications():
    fn = lambda a, b: np.arange(a, b, dtype=float) ** 2
    assert np.array_equal(run_replications(fn, 103, 10, 1), run_replications(fn, 103, 7, 5))


# -- clt --------------------------------------------------------------------


def test_clt_passes_and_reports_normality():
    rep = run(cfg(R=800, functionals=[COS, {"kind": "indicator", "hi": math.pi / 2}]))
    assert rep.passed, [c.to_dict() for c in rep.criteria]
    stat = rep.per_n[0]
    assert abs(stat["skewness"]) < 0.5 and abs(stat["excess_kurtosis"]) < 1.0


def test_clt_discrepancy_stays_within_band_as_R_grows():
    small = run(cfg(R=500, seed=2, functionals=[CONST]))
    large = run(cfg(R=2000, seed=2, functionals=[CONST]))
    for rep in (small, large):
        assert rep.criterion("covariance_n128").value <= 3.0
    se_ratio = large.per_n[0]["cov_se"][0, 0] / small.per_n[0]["cov_se"][0, 0]
    assert 0.4 < se_ratio < 0.6


def test_kappa4_misset_is_caught():
    model = {"alpha": [-0.5], "innovation": "standardized-uniform", "kappa4": 0.0}
    rep = run(cfg(model=model, R=1000, functionals=[CONST]))
    assert not rep.passed
    assert "covariance_n128" in rep.failed
    truthful = run(cfg(model={**model, "kappa4": None}, R=1000, functionals=[CONST]))
    assert truthful.criterion("covariance_n128").passed


# -- rate -------------------------------------------------------------------


@given(st.floats(0.01, 100.0), st.lists(st.integers(100, 100_000), min_size=2, max_size=6, unique=True))
def test_slope_self_test(c, ns):
    ns = sorted(ns)
    errors = c * np.asarray(ns, dtype=float) ** -0.4
    assert fit_log_slope(ns, errors) == pytest.approx(-0.4, abs=0.01)


def test_rate_constant_truth_has_no_bias_term():
    c = McConfig.from_dict({"experiment": "rate", "model": AR05, "n": [1000, 2000, 4000, 8000], "R": 40,
                            "seed": 4, "options": {"bandwidth": 0.2, "bootstrap": 100}})
    rep = run(c)
    slope = rep.targets["slope_estimate"]
    # with b fixed only the variance term (b n)^(-1/2) remains
    assert -0.65 <= slope <= -0.35


def test_rate_sweep_u_shape():
    c = McConfig.from_dict({
        "experiment": "rate",
        "model": {"alpha": [CoefficientCurve.from_function(lambda u: -(0.3 + 0.4 * np.sin(np.pi * u)), 14).to_dict()]},
        "n": [2000], "R": 30, "seed": 6,
        "options": {"bootstrap": 10, "sweep": {"n": 4000, "b": [0.05, 0.1, 0.2, 0.4, 0.8]}},
    })
    rep = run(c)
    assert rep.criterion("bandwidth_u_shape").passed


# -- bias -------------------------------------------------------------------


def test_bias_white_noise_is_exact():
    c = McConfig.from_dict({"experiment": "bias", "model": {}, "n": [64, 128], "R": 2, "functionals": [CONST]})
    rep = run(c)
    assert rep.passed
    assert all(abs(s["scaled_bias"]) < 1e-12 for s in rep.per_n)


def test_bias_reports_are_deterministic_and_bounded():
    jump = {"alpha": [{"kind": "piecewise-constant", "breakpoints": [0.5], "values": [-0.2, -0.7]}]}
    for model in (AR05, jump):
        c = McConfig.from_dict({"experiment": "bias", "model": model, "n": [128, 256, 512],
                                "functionals": [COS, {"kind": "indicator", "hi": 1.0}]})
        assert report_json(c) == report_json(c)
        assert run(c).passed


# -- maximum bound ----------------------------------------------------------


def test_log_abs_mgf_matches_quadrature():
    from scipy.integrate import quad

    for c in (0.0, 0.3, 1.7, 4.0):
        g = quad(lambda z: np.exp(c * abs(z) - z * z / 2) / math.sqrt(2 * np.pi), -np.inf, np.inf)[0]
        assert float(log_abs_mgf("gaussian", c)) == pytest.approx(math.log(g), abs=1e-10)
        s3 = math.sqrt(3)
        u = quad(lambda z: np.exp(c * abs(z)) / (2 * s3), -s3, s3)[0]
        assert float(log_abs_mgf("standardized-uniform", c)) == pytest.approx(math.log(u), abs=1e-10)


def test_max_bound_constant_white_noise():
    # n P(|Z| > 2 log n) <= E exp(|Z|) by Markov with threshold e^{2 log n}
    k = max_bound_constant(TvArmaModel(), 100)
    assert k == pytest.approx(math.exp(float(log_abs_mgf("gaussian", 1.0))))


def test_maxbound_white_noise_examples():
    c = McConfig.from_dict({"experiment": "maxbound", "model": {}, "n": [1000], "R": 5000, "seed": 2})
    rep = run(c)
    assert rep.per_n[0]["rate"] < 0.01
    uni = McConfig.from_dict({"experiment": "maxbound", "model": {"innovation": "standardized-uniform"},
                              "n": [500, 1000], "R": 500, "seed": 2})
    rep = run(uni)
    assert all(s["exceedances"] == 0 for s in rep.per_n)
    assert rep.passed


# -- tail -------------------------------------------------------------------


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=200))
def test_exceedance_curve_monotone(values):
    eta = np.linspace(0, 60, 61)
    p = exceedance_curve(np.array(values), eta)
    assert np.all(np.diff(p) <= 0) and p[0] == 1.0


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=200), st.floats(0.1, 10))
def test_exceedance_curve_rescales(values, s):
    v = np.array(values)
    eta = np.linspace(0.5, 40, 30)
    assert np.array_equal(exceedance_curve(s * v, s * eta), exceedance_curve(v, eta)) or np.allclose(
        exceedance_curve(s * v, s * eta * (1 + 1e-12)), exceedance_curve(v, eta * (1 + 1e-12)))


def test_tail_doubling_phi_doubles_eta_axis():
    one = run(cfg(experiment="tail", R=2000, seed=3))
    two = run(cfg(experiment="tail", R=2000, seed=3, functionals=[{**COS, "amplitude": 2.0}]))
    a, b = one.per_n[0], two.per_n[0]
    assert b["sd"] == pytest.approx(2 * a["sd"], rel=1e-12)
    assert np.allclose(b["eta"], 2 * a["eta"], rtol=1e-12)
    assert np.array_equal(b["exceedance"], a["exceedance"])
    assert one.criterion("monotone_n128").passed
