import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nldsid import (BufferLayout, ConfigError, MissingNoiseError, NoiseModel, SystemSpec, identity,
                    leaky_relu, rand_bimod, simulate)
from nldsid.diag import (DiagReport, check_coupling, check_gram_floor, check_norm_concentration,
                         mixing_proxy, noise_projection, norm_bound, relu_decay, relu_sign_fraction)


def spec_of(a, link=None, noise="gaussian"):
    return SystemSpec(np.atleast_2d(a), link or leaky_relu(0.5), NoiseModel(noise, 1.0))


def test_gram_floor_pass_and_fail():
    spec = spec_of(rand_bimod(5, 0.98, 0))
    assert check_gram_floor(simulate(spec, 100000, seed=0), 1.0).passed
    short = check_gram_floor(simulate(spec, 3, seed=0), 1.0)
    assert short.n_samples == 3 and short.observed < 0.5 and not short.passed
    quiet = spec_of(np.zeros((2, 2)), noise="none")
    rep = check_gram_floor(simulate(quiet, 50, seed=0, x0=[0, 0], burn_in=0), 0.0)
    assert rep.observed == 0.0 and not rep.passed


def test_coupling_examples():
    spec = spec_of(np.zeros((3, 3)))
    tr = simulate(spec, 60, seed=1, store_noise=True)
    layout = BufferLayout.for_horizon(60, 8, 2)
    rep = check_coupling(tr, layout, seed=4)
    assert rep.passed and rep.observed == 0.0
    spec = spec_of([[0.5]], identity())
    tr = simulate(spec, 60, seed=1, store_noise=True)
    rep = check_coupling(tr, layout, seed=4)
    assert rep.passed and rep.observed == pytest.approx(1.0, abs=1e-9)


def test_coupling_needs_noise():
    spec = spec_of(rand_bimod(2, 0.5, 0))
    with pytest.raises(MissingNoiseError):
        check_coupling(simulate(spec, 30, seed=0), BufferLayout.for_horizon(30, 5, 1), 0)
    with pytest.raises(MissingNoiseError):
        noise_projection(simulate(spec, 30, seed=0))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10 ** 6), d=st.integers(1, 5), rho=st.floats(0.05, 0.99),
       slope=st.floats(0.1, 1.0))
def test_coupling_passes_for_stable_specs(seed, d, rho, slope):
    spec = spec_of(rand_bimod(d, rho, seed), leaky_relu(slope))
    tr = simulate(spec, 400, seed=seed, store_noise=True)
    assert check_coupling(tr, BufferLayout.for_horizon(400, 30, 3), seed=seed + 1).passed


def test_relu_fraction_zero_at_zero_epsilon():
    for seed in range(5):
        rep = relu_sign_fraction(6, 0.0, 2000, seed)
        assert rep.observed == 0.0 and rep.n_samples == 1999


def test_relu_fraction_smaller_in_high_dimension():
    seeds = range(20)
    lo = [relu_sign_fraction(4, 0.1, 5000, s).observed for s in seeds]
    hi = [relu_sign_fraction(32, 0.1, 5000, s).observed for s in seeds]
    se = math.sqrt((np.var(lo) + np.var(hi)) / len(seeds))
    assert np.mean(hi) <= np.mean(lo) + 3 * se
    rep = relu_decay([4, 8, 16, 32], 0.1, 5000, range(5))
    assert rep.details["slope"] < 0
    assert len(rep.details["per_seed"]) == 4


def test_relu_fraction_validation():
    with pytest.raises(ConfigError):
        relu_sign_fraction(1, 0.1, 100, 0)


def test_norm_concentration():
    tr = simulate(spec_of(np.zeros((3, 3))), 20000, seed=0)
    rep = check_norm_concentration(tr)
    assert rep.passed and rep.observed == pytest.approx(3.0, rel=0.05)
    assert rep.bound == 24.0
    spec = spec_of(rand_bimod(5, 0.98, 0))
    assert check_norm_concentration(simulate(spec, 50000, seed=1)).passed
    for rho in (0.9, 0.99, 0.999):
        spec = spec_of(rand_bimod(3, rho, 2))
        rep = check_norm_concentration(simulate(spec, 20000, seed=2))
        assert rep.passed and rep.bound == pytest.approx(norm_bound(spec))
    with pytest.raises(ConfigError):
        norm_bound(spec_of(rand_bimod(2, 0.5, 0), noise="student_t:5"))


def test_mixing_proxy():
    assert mixing_proxy(1 / math.e) == pytest.approx(1.0)
    assert mixing_proxy(0.98) == pytest.approx(49.5, abs=0.05)
    assert mixing_proxy(0.5, math.e) == pytest.approx(2.885, abs=1e-3)
    with pytest.raises(ConfigError):
        mixing_proxy(1.0)


def test_noise_projection_formula():
    spec = spec_of(rand_bimod(3, 0.7, 0))
    tr = simulate(spec, 100, seed=0, store_noise=True)
    n = noise_projection(tr)
    i = 1
    expected = sum(tr.noise[t, i] * tr.states[t] for t in range(100)) / 100
    np.testing.assert_allclose(n[i], expected, atol=1e-14)


def test_report_json_round_trip():
    reports = [
        DiagReport("a", 0.5, 1.0, True, 10),
        DiagReport("b", [0.4, 0.3], -0.05, False, 40, {"slope": -0.01, "ds": [4, 8]}),
        DiagReport("c", 0.1, None, True, 3, {"nan": math.nan}),
    ]
    for rep in reports:
        back = DiagReport.from_json(rep.to_json())
        assert back.name == rep.name and back.passed == rep.passed
        assert back.observed == rep.observed and back.bound == rep.bound
        assert back.n_samples == rep.n_samples
        assert back.to_json() == rep.to_json()
