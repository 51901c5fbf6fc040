import numpy as np
import pytest
from hypothesis import given, strategies as st

from lightfront.pump import (BumpEnvelope, ConstantEnvelope, DivergentTail, GaussianEnvelope,
                             ModulatedCarrier, OutOfDomain, SampledEnvelope, SampledPump,
                             Superposition, ZeroPump, gaussian_pulse, plasma_impact_pulse,
                             pulse_length, threshold_for_length)


def test_zero_pump():
    p = ZeroPump()
    assert np.all(p.eval(np.linspace(-5, 5, 11)) == 0)
    assert np.all(p.alpha(3.0) == 0)


def test_amplitude_and_polarization(pulse4):
    assert np.max(np.abs(pulse4.eval(np.linspace(-1, 1, 2001)))) == pytest.approx(5.0, rel=1e-5)
    assert np.all(pulse4.eval(np.linspace(-3, 3, 11))[1] == 0)
    circ = ModulatedCarrier.from_a0(1, 0.8, "bump", half_width_um=10, polarization="circular")
    xi = np.linspace(-2, 2, 101)
    # |eps| equals the envelope for circular polarization
    assert np.allclose(np.hypot(*circ.eval(xi)), circ.envelope_value(xi), rtol=1e-12)


def test_alpha_is_minus_integral(pulse4):
    xi = np.linspace(-10, 10, 41)
    fd = (pulse4.alpha(xi + 1e-5) - pulse4.alpha(xi - 1e-5)) / 2e-5
    assert np.allclose(fd, -pulse4.eval(xi), atol=1e-6)
    assert np.all(np.abs(pulse4.alpha(pulse4.extent[0] - 1)) < 1e-30)


@given(st.floats(1.0, 60.0))
def test_slow_modulation_estimate(sigma):
    p = ModulatedCarrier.from_a0(1, 0.8, "gaussian", sigma_um2=sigma)
    xi = np.linspace(-2 * np.sqrt(sigma), 2 * np.sqrt(sigma), 101)
    err = np.max(np.abs(p.alpha(xi) - p.alpha_slow(xi)))
    # next term of the integration by parts is envelope' / k^2
    assert err < 2 * p.envelope.amplitude / (p.k**2 * np.sqrt(sigma))
    assert err < 0.2 * np.max(np.abs(p.alpha_slow(xi)))


def test_support_cut_and_breakpoints():
    p = plasma_impact_pulse()
    assert p.extent == (0.0, 27.0)
    assert 0.0 in p.breakpoints and 27.0 in p.breakpoints
    assert np.all(p.eval(np.array([-0.1, 27.1])) == 0)
    assert p.envelope_value(13.5) == pytest.approx(15 / 0.8)


def test_constant_envelope_needs_support():
    p = ModulatedCarrier(ConstantEnvelope(1.0), 2 * np.pi / 0.8)
    with pytest.raises(DivergentTail):
        p.alpha(1.0)


def test_envelopes_validate():
    with pytest.raises(ValueError):
        GaussianEnvelope(1.0, -1.0)
    with pytest.raises(ValueError):
        BumpEnvelope(1.0, 0.0)
    with pytest.raises(ValueError):
        SampledEnvelope([0, 1, 1], [0, 1, 0])


def test_bump_is_compact():
    env = BumpEnvelope(2.0, 3.0, 1.0)
    assert env(4.0) == 0 and env(-2.0) == 0 and env(1.0) == pytest.approx(2.0)
    assert env.bounds() == (-2.0, 4.0)


def test_sampled_envelope_matches_gaussian():
    xi = np.linspace(-30, 30, 3001)
    env = SampledEnvelope(xi, 5 * np.exp(-xi**2 / 40))
    assert env(1.234) == pytest.approx(5 * np.exp(-1.234**2 / 40), rel=1e-6)
    assert env(31.0) == 0.0


def test_sampled_pump_domain():
    xi = np.linspace(0, 10, 201)
    vals = np.stack([np.sin(np.pi * xi / 10) ** 2, np.zeros_like(xi)])
    p = SampledPump(xi, vals)
    with pytest.raises(OutOfDomain):
        p.eval(np.array([11.0]))
    assert p.alpha(np.array([20.0]))[0, 0] == pytest.approx(-5.0, rel=1e-6)
    cut = SampledPump(xi, vals, support=(0, 10))
    assert cut.eval(np.array([11.0]))[0, 0] == 0.0


def test_superposition_adds():
    a, b = gaussian_pulse(1), gaussian_pulse(2)
    s = Superposition([a, b])
    xi = np.linspace(-5, 5, 21)
    assert np.allclose(s.eval(xi), a.eval(xi) + b.eval(xi))
    assert np.allclose(s.alpha(xi), a.alpha(xi) + b.alpha(xi))


def test_pulse_length_threshold_inverse():
    p = plasma_impact_pulse()
    lvl = threshold_for_length(ModulatedCarrier.from_a0(15, 0.8, "gaussian", sigma_um2=20), 20.0)
    assert pulse_length(p, lvl) == pytest.approx(20.0)
    assert pulse_length(ZeroPump(), 1.0) == 0.0
