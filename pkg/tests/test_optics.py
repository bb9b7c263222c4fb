import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qspec.errors import ConfigError, OutOfModel
from qspec.optics import (
    MismatchMode,
    OpticalConfig,
    fringe_angle,
    fringe_period_n,
    idler_wavelength,
    mode_point,
    transmissivity,
)

CFG = OpticalConfig()
LAMBDA_S = 609.16e-9


def test_idler_wavelength_reference_point():
    # direct evaluation of 1/l_i = 1/l_p - 1/l_s
    expected = 1.0 / (1.0 / 532.0 - 1.0 / 609.16)
    lam = idler_wavelength(CFG, LAMBDA_S) * 1e9
    assert lam == pytest.approx(expected, rel=1e-12)
    assert lam == pytest.approx(4200.0, abs=0.1)


def test_idler_wavelength_degenerate():
    assert idler_wavelength(CFG, 1064e-9) == pytest.approx(1064e-9, rel=1e-14)


@pytest.mark.parametrize("lam", [532e-9, 500e-9])
def test_idler_wavelength_rejects_short_signal(lam):
    with pytest.raises(OutOfModel):
        idler_wavelength(CFG, lam)


def test_transmissivity_values():
    assert transmissivity(CFG.with_params(alpha_per_cm=0.0)) == 1.0
    assert transmissivity(CFG) == pytest.approx(math.exp(-0.375), rel=1e-14)
    assert transmissivity(CFG) == pytest.approx(0.6873, abs=5e-5)
    assert transmissivity(CFG.with_params(alpha_per_cm=1e3)) < 1e-300


def test_matched_collinear_point_has_zero_crystal_mismatch():
    mp = mode_point(CFG, LAMBDA_S, 0.0)
    assert mp.delta_crystal == 0.0


def test_collinear_medium_mismatch():
    lam_i = idler_wavelength(CFG, LAMBDA_S)
    expected = CFG.chamber_length * 2 * math.pi / lam_i * (1 - CFG.n_idler_medium)
    mp = mode_point(CFG, LAMBDA_S, 0.0)
    assert mp.delta_medium == pytest.approx(expected, rel=1e-10)
    assert mp.delta_medium == pytest.approx(3.37, abs=0.01)


def test_fringe_spacing_between_reference_angles():
    mp = mode_point(CFG, LAMBDA_S, np.array([2.09e-3, 2.73e-3]))
    gap = mp.total_phase[1] - mp.total_phase[0]
    assert abs(gap - math.pi) < 0.1


def test_table_indices_mode_keeps_raw_mismatch():
    cfg = CFG.with_params(mismatch_mode=MismatchMode.TABLE)
    mp = mode_point(cfg, LAMBDA_S, 0.0)
    raw = cfg.crystal_length * 2 * math.pi * (
        (cfg.n_pump_crystal - cfg.n_idler_crystal) / cfg.lambda_pump
        - (cfg.n_signal_crystal - cfg.n_idler_crystal) / LAMBDA_S)
    assert mp.delta_crystal == pytest.approx(raw, rel=1e-12)
    assert abs(mp.delta_crystal) > 100


def test_evanescent_idler_rejected():
    # large signal/idler index contrast pushes q past the medium idler wavenumber
    cfg = CFG.with_params(n_signal_medium=1.0, n_idler_medium=0.05)
    with pytest.raises(OutOfModel):
        mode_point(cfg, LAMBDA_S, 0.09)


def test_wide_angle_near_degeneracy_is_evanescent():
    with pytest.raises(OutOfModel):
        mode_point(CFG, 540e-9, 0.02)


def test_large_angle_rejected():
    with pytest.raises(OutOfModel):
        mode_point(CFG, LAMBDA_S, 0.1)


@pytest.mark.parametrize("kw", [
    {"alpha_per_cm": -0.1}, {"crystal_length_mm": 0.0}, {"pair_amplitude": 0.02},
    {"pair_amplitude": 0.0}, {"shots": 0}, {"n_idler_medium": -1.0}, {"shots": 1.5},
])
def test_config_invariants(kw):
    with pytest.raises(ConfigError):
        OpticalConfig(**kw)


# near-degenerate signals have a long-wavelength idler that turns evanescent at wide angles
angles = st.floats(min_value=-0.01, max_value=0.01, allow_nan=False)
signals = st.floats(min_value=560e-9, max_value=900e-9)
indices = st.floats(min_value=1 - 3e-4, max_value=1.0)


@settings(max_examples=200, deadline=None)
@given(lam=signals, theta=angles, n=indices)
def test_mode_point_invariants(lam, theta, n):
    cfg = CFG.with_params(n_idler_medium=n)
    mp = mode_point(cfg, lam, theta)
    resid = 1 / mp.lambda_idler + 1 / lam - 1 / cfg.lambda_pump
    assert abs(resid) <= 1e-12 / cfg.lambda_pump
    bookkeeping = mp.phi_p - mp.phi_i - mp.phi_s - mp.total_phase
    assert abs(bookkeeping) < 1e-9
    assert mp.tau == pytest.approx(math.exp(-cfg.alpha_per_cm * cfg.chamber_length_cm), rel=1e-12)
    assert mp.tau == transmissivity(cfg)

    mirror = mode_point(cfg, lam, -theta)
    for name in ("delta_crystal", "delta_medium", "phi_s", "phi_i"):
        assert getattr(mirror, name) == getattr(mp, name)


@settings(max_examples=50, deadline=None)
@given(lam=signals)
def test_total_phase_increases_with_angle(lam):
    thetas = np.linspace(0, 0.01, 400)
    phase = mode_point(CFG, lam, thetas).total_phase
    assert np.all(np.diff(phase) > 0)


def test_vectorized_matches_scalar():
    thetas = np.array([0.0, 1e-3, 2.5e-3])
    vec = mode_point(CFG, LAMBDA_S, thetas)
    for k, t in enumerate(thetas):
        sc = mode_point(CFG, LAMBDA_S, t)
        assert vec.total_phase[k] == pytest.approx(sc.total_phase, rel=0, abs=1e-15)


def test_fringe_angle_hits_requested_phase():
    for m in (2, 3, 4):
        t = fringe_angle(CFG, LAMBDA_S, m * math.pi)
        assert abs(mode_point(CFG, LAMBDA_S, t).total_phase - m * math.pi) < 1e-12


def test_fringe_period_advances_collinear_phase_by_two_pi():
    period = fringe_period_n(CFG, LAMBDA_S)
    assert period == pytest.approx(1.68e-4, rel=0.01)
    a = mode_point(CFG, LAMBDA_S, 0.0).delta_medium
    b = mode_point(CFG.with_params(n_idler_medium=CFG.n_idler_medium - period), LAMBDA_S, 0.0).delta_medium
    assert b - a == pytest.approx(2 * math.pi, rel=1e-9)
