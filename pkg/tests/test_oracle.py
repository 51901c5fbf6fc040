import numpy as np
import pytest

from lightfront.dynamics import integrate_general
from lightfront.fields import ConstantUniform, ZeroField
from lightfront.kinematics import XiState
from lightfront.oracle import TState, compare, integrate_time
from lightfront.pump import ConstantEnvelope, ModulatedCarrier, ZeroPump, gaussian_pulse

PUMP = gaussian_pulse(2.0, sigma_um2=8.0)


def pair(pump, field, lo, hi, init=None):
    init = init or XiState.rest(lo)
    tr = integrate_general(pump, field, init, (lo, hi))
    g = np.sqrt(1 + np.sum(init.u_perp**2) + 0.0)
    u = np.array([*init.u_perp, ((1 + init.v) / init.s - init.s) / 2])
    t0 = TState(lo + init.z, np.array([*init.x_perp, init.z]), u)
    tt = integrate_time(pump, field, t0, (t0.ct, float(tr.ct[-1])))
    return tr, tt


def test_rest_state():
    s = TState.rest(2.0)
    assert s.gamma == 1.0 and s.ct == 2.0


def test_free_particle_stays_put():
    tt = integrate_time(ZeroPump(), ZeroField(), TState.rest(), (0.0, 10.0))
    assert np.all(tt.x == 0) and np.all(tt.u == 0)
    assert set(tt.columns()) == {"ct_um", "x_um", "y_um", "z_um", "ux", "uy", "uz", "gamma"}


@pytest.mark.parametrize("field", [ZeroField(), ConstantUniform(e_z=-0.02, b_z=0.4),
                                   ConstantUniform(e_perp=(0.01, 0.0), b_perp=(0.0, 0.01))])
def test_agrees_with_xi_domain(field):
    lo, hi = PUMP.extent
    tr, tt = pair(PUMP, field, lo, hi)
    rep = compare(tr, tt)
    assert rep.agrees(1e-6), rep.max_rel


def test_moving_initial_state():
    lo, hi = PUMP.extent
    init = XiState.from_lab(lo, (0.1, 0.0, 0.0), (0.3, -0.2, 0.5))
    tr, tt = pair(PUMP, ZeroField(), lo, hi, init)
    assert compare(tr, tt).agrees(1e-6)


def test_impulse_breakpoints():
    k = 2 * np.pi / 0.8
    half = ModulatedCarrier(ConstantEnvelope(5.0), k, -1.0, 0.0, phi=-np.pi / 2,
                            support=(0.0, 0.4))
    tr, tt = pair(half, ZeroField(), -1.0, 3.0)
    assert compare(tr, tt).agrees(1e-6)


def test_mismatch_is_flagged():
    lo, hi = PUMP.extent
    tr, _ = pair(PUMP, ZeroField(), lo, hi)
    _, other = pair(gaussian_pulse(2.5, sigma_um2=8.0), ZeroField(), lo, hi)
    rep = compare(tr, other)
    assert not rep.agrees() and rep.worst > 1e-2


def test_disjoint_runs_rejected():
    a = integrate_time(ZeroPump(), None, TState.rest(0.0), (0.0, 1.0))
    b = integrate_general(ZeroPump(), None, XiState.rest(5.0), (5.0, 6.0))
    with pytest.raises(ValueError):
        compare(b, a)
