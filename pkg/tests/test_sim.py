import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from losim import presets
from losim.rx_dsp import CarrierRecoveryParams
from losim.sim import (
    SimConfig,
    cr_bandwidth_for,
    fit_gamma,
    fit_sinr_model,
    run_uplink,
    sinr_model,
    sweep_users,
    theory_ber,
    without_phase_noise,
)


def _cfg(**kw):
    base = dict(arch=presets.array_arch(16, 4, pll_bw=5e6), K=2, n_symbols=8192,
                n_trials=2, epoch=2e-6, cr=CarrierRecoveryParams(10e6))
    base.update(kw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return SimConfig(**base)


def test_no_noise_is_nearly_perfect():
    cfg = _cfg(arch=without_phase_noise(presets.array_arch(16, 4)))
    m = run_uplink(cfg)
    assert m.sinr_db > 80
    assert m.ber == 0.0


def test_deterministic_and_independent_of_jobs():
    cfg = _cfg()
    a, b = run_uplink(cfg), run_uplink(cfg)
    assert a == b
    assert run_uplink(cfg, jobs=2) == a
    assert run_uplink(replace(cfg, seed=1)) != a


def test_sinr_equals_evm():
    m = run_uplink(_cfg(thermal_snr=10.0))
    assert m.sinr_db == pytest.approx(-20 * math.log10(m.evm), abs=1e-9)


def test_ccg_multiuser_matches_single_user():
    arch = presets.array_arch(16, 16)
    one = run_uplink(_cfg(arch=arch, K=1, n_trials=3))
    many = run_uplink(_cfg(arch=arch, K=4, n_trials=3))
    assert abs(one.sinr_db - many.sinr_db) < 1.0


def test_thermal_noise_lowers_sinr_to_theory():
    cfg = _cfg(arch=without_phase_noise(presets.array_arch(16, 4)), thermal_snr=0.0,
               cr=None, n_symbols=20_000)
    m = run_uplink(cfg)
    # ZF at separated angles: post-combining SNR close to 10 log10(M)
    assert m.sinr_db == pytest.approx(10 * math.log10(16), abs=0.5)
    assert m.ber == pytest.approx(theory_ber(cfg), rel=0.2)


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(0.5, 5), n_p_db=st.floats(-45, -25))
def test_fit_recovers_alpha(alpha, n_p_db):
    K = np.array([1, 2, 4, 8, 16])
    y = 10 * np.log10(sinr_model(K, 10 ** (n_p_db / 10), alpha, 1.0))
    fit = fit_sinr_model(K, y, 1.0)
    assert fit.value == pytest.approx(alpha, rel=1e-9)
    assert np.max(np.abs(fit.residual_db)) < 1e-9


@settings(max_examples=20, deadline=None)
@given(gamma=st.floats(0.0, 1.0))
def test_fit_recovers_gamma(gamma):
    K = np.array([1, 2, 4, 8, 16])
    y = 10 * np.log10(sinr_model(K, 1e-3, 2.0, gamma))
    assert fit_gamma(K, y, 2.0).value == pytest.approx(gamma, abs=1e-9)


def test_fit_with_zero_gamma_is_undefined():
    K = [1, 2, 4]
    fit = fit_sinr_model(K, [30.0, 30.0, 30.0], 0.0)
    assert fit.value is None
    assert np.allclose(fit.predicted_db, 30.0)


def test_fit_needs_k1():
    with pytest.raises(ValueError):
        fit_sinr_model([2, 4], [30.0, 29.0], 1.0)


def test_model_thermal_limit():
    assert 10 * math.log10(sinr_model(1, 1e-12, 2.0, 1.0, n_t=0.01)) == pytest.approx(20.0,
                                                                                       abs=1e-6)


def test_cr_policy_lookup():
    rows = ((-math.inf, 1e5), (6.0, 1e6), (12.0, 1e7))
    assert cr_bandwidth_for(-3.0, rows) == 1e5
    assert cr_bandwidth_for(6.0, rows) == 1e6
    assert cr_bandwidth_for(40.0, rows) == 1e7


def test_config_validation():
    arch = presets.array_arch(16, 4)
    with pytest.raises(ValueError):
        SimConfig(arch, K=17)
    with pytest.raises(ValueError):
        SimConfig(arch, beamformer="mmse")
    with pytest.raises(ValueError):
        SimConfig(arch, constellation="8psk")
    with pytest.raises(ValueError):
        SimConfig(arch, cr=CarrierRecoveryParams(500e6))
    with pytest.warns(RuntimeWarning):
        SimConfig(arch, n_symbols=1000)


def test_user_sweep_rows():
    s = sweep_users(_cfg(n_trials=1), [1, 2])
    assert list(s.column("K")) == [1, 2]
    assert s.best["sinr_db"] == max(s.column("sinr_db"))
