import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import rel_err
from lightfront.kinematics import plasma_coupling
from lightfront.plasma import (ProfileDensity, StepDensity, aperp_residual,
                               carrier_phase_sensitivity, default_Z_grid, invariant,
                               invariant_drift, period_estimate, quadrature_period, solve_family,
                               solve_step_cauchy)
from lightfront.pump import ModulatedCarrier, ZeroPump, plasma_impact_pulse

N0 = 2e18
M = plasma_coupling(N0)
SPAN = (0.0, 160.0)


@pytest.fixture(scope="module")
def weak():
    return plasma_impact_pulse(a0=1.0)


@pytest.fixture(scope="module")
def cauchy_weak(weak):
    return solve_step_cauchy(weak, M, SPAN)


def test_step_density_coupling():
    d = StepDensity(N0)
    assert d.M == pytest.approx(M) and d.is_step
    assert d.coupling(5.0, -2.0) == pytest.approx(-2 * M)
    # an element pushed out of the plasma only feels the charge it left behind
    assert d.coupling(1.0, -3.0) == pytest.approx(-M)
    assert d.n(-1.0) == 0 and d.N(2.0) == pytest.approx(2 * d.n0)
    with pytest.raises(ValueError):
        StepDensity(-1.0)


def test_profile_density_constant_matches_step():
    p = ProfileDensity([0.0, 10.0, 20.0], [N0, N0, N0])
    d = StepDensity(N0)
    for Z, D in [(3.0, 1.5), (1.0, -4.0), (30.0, -2.0)]:
        assert p.coupling(Z, D) == pytest.approx(d.coupling(Z, D), rel=1e-12)
    ramp = ProfileDensity([0.0, 10.0], [0.0, N0])
    assert ramp.N(10.0) == pytest.approx(5.0 * StepDensity(N0).n0, rel=1e-3)
    assert not ramp.is_step


def test_default_grid(weak):
    g = default_Z_grid(weak, 8)
    assert g[0] == 0 and g[-1] == pytest.approx(81.0) and len(g) == 8


def test_zero_pump_no_motion():
    m = solve_step_cauchy(ZeroPump(), M, (0.0, 50.0))
    assert np.all(m.Delta == 0) and np.all(m.s == 1)


def test_invariant_and_mass_shell(cauchy_weak):
    m = cauchy_weak
    assert np.max(np.abs(m.mass_shell_residual())) < 1e-9
    post = m.xi > m.pulse_end
    C = invariant(m)[post]
    assert np.ptp(C) / C[0] < 1e-8
    assert invariant_drift(m).max() < 1e-8


def test_weak_field_period(cauchy_weak):
    est = period_estimate(cauchy_weak)
    assert est.xi_H == pytest.approx(2 * np.pi / np.sqrt(M), rel=0.02)
    assert est.mismatch < 1e-6
    assert est.cycles >= 3


def test_quadrature_period_limit():
    assert quadrature_period(1.0, 0.0, M) == pytest.approx(2 * np.pi / np.sqrt(M), rel=1e-12)
    with pytest.raises(ValueError):
        quadrature_period(1.0, 0.0, 0.0)


@settings(max_examples=8)
@given(st.floats(1.01, 3.0))
def test_quadrature_period_grows_with_C(C):
    # larger oscillations are slower
    assert quadrature_period(C, 0.0, M) > quadrature_period(1.0, 0.0, M)


def test_period_needs_cycles(weak):
    m = solve_step_cauchy(weak, M, (0.0, 40.0))
    with pytest.raises(ValueError):
        period_estimate(m)
    m = solve_step_cauchy(weak, M, (0.0, 27.0 + 2.5 * 23.6))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        period_estimate(m)
    assert any("cycle" in str(x.message) for x in w)


def test_family_universality(weak, cauchy_weak):
    fam = solve_family(weak, StepDensity(N0), [0.0, 5.0, 20.0, 60.0], (0.0, 80.0), workers=2)
    # the surface element swings out of the plasma at any amplitude
    assert fam.universal and list(fam.valid) == [False, True, True, True]
    assert fam.universality_deviation() < 1e-12
    ref = solve_step_cauchy(weak, M, (0.0, 80.0), xi_eval=fam.members[1].xi)
    assert rel_err(fam.members[1].Delta, ref.Delta) < 1e-12
    rows = fam.summary_rows(23.6)
    assert set(rows) == {"Z_um", "valid", "max_gamma", "xi_H_um"}
    assert set(fam.members[0].columns()) == {"xi_um", "Delta_um", "s", "gamma", "uz", "v"}


def test_surface_expulsion_flagged():
    strong = plasma_impact_pulse()
    fam = solve_family(strong, StepDensity(N0), [0.0, 0.5, 40.0], (0.0, 60.0))
    assert not fam.members[0].valid and fam.members[-1].valid
    assert np.min(fam.members[0].z_e) < 0


def test_static_b_path_reduces_without_b(weak):
    d = StepDensity(N0)
    plain = solve_family(weak, d, [10.0], (0.0, 60.0))
    tiny = solve_family(weak, d, [10.0], (0.0, 60.0), b_s=(0.0, 0.0, 1e-13))
    assert not tiny.universal and plain.universal
    assert rel_err(tiny.members[0].Delta, plain.members[0].Delta) < 1e-7
    assert rel_err(tiny.members[0].s, plain.members[0].s) < 1e-7
    on = solve_family(weak, d, [10.0], (0.0, 60.0), b_s=(0.0, 0.0, 0.5))
    assert rel_err(on.members[0].s, plain.members[0].s) > 1e-5


def test_family_rejects_negative_labels(weak):
    with pytest.raises(ValueError):
        solve_family(weak, StepDensity(N0), [-1.0, 2.0], (0.0, 30.0))


def test_residual_zero_pump():
    fam = solve_family(ZeroPump(), StepDensity(N0), [0.0, 1.0], (0.0, 10.0))
    assert aperp_residual(fam, 5.0).ratio == 0.0


def test_residual_linear_in_density(weak):
    ratios = []
    for n0 in (1e16, 2e16):
        fam = solve_family(weak, StepDensity(n0), [0.0, 1.0, 10.0], (0.0, 60.0))
        ratios.append(aperp_residual(fam, 50.0, step=0.1).ratio)
    assert ratios[1] / ratios[0] == pytest.approx(2.0, rel=0.05)
    res = aperp_residual(fam, 50.0, step=0.1)
    assert res.passed and set(res.rows()) == {"ct_um", "z_um", "ratio"}


def test_residual_window_checked(weak):
    fam = solve_family(weak, StepDensity(N0), [0.0, 1.0], (0.0, 40.0))
    with pytest.raises(ValueError):
        aperp_residual(fam, 50.0)


def test_carrier_phase_sensitivity_shapes():
    factory = lambda ph: plasma_impact_pulse(a0=1.0, phase=ph)
    ds, du = carrier_phase_sensitivity(factory, M, (0.0, 60.0))
    assert 0 <= ds < 0.01 and du >= 0
