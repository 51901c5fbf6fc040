import numpy as np
import pytest

from lightfront.fields import AxialProfile, ConstantUniform, SumField, ZeroField, axial_from_constant


def test_zero_field():
    x = np.zeros((3, 4))
    assert np.all(ZeroField().e(x) == 0) and np.all(ZeroField().b(x) == 0)


def test_constant_uniform_broadcast():
    f = ConstantUniform(e_perp=(1.0, 2.0), e_z=3.0, b_perp=(4.0, 5.0), b_z=6.0)
    e = f.e(np.zeros((3, 5)))
    assert e.shape == (3, 5) and np.all(e[:, 2] == [1, 2, 3])
    assert np.all(f.b(np.zeros(3)) == [4, 5, 6])
    assert not f.is_zero and ConstantUniform().is_zero


def test_axial_profile_range_check():
    f = AxialProfile(lambda z: z, z_range=(0.0, 1.0))
    assert f.e(np.array([0, 0, 0.5]))[2] == 0.5
    with pytest.raises(ValueError):
        f.e(np.array([0, 0, 2.0]))


def test_b_perp_integral_quadrature_fallback():
    f = AxialProfile(lambda z: 0 * z, lambda z: np.stack([np.cos(z), z]))
    assert np.allclose(f.b_perp_integral(0.0, 2.0), [np.sin(2.0), 2.0], rtol=1e-12)


def test_axial_from_constant():
    f = axial_from_constant(ConstantUniform(e_z=-0.1, b_perp=(0.2, 0.0)))
    assert f.e_z(np.array(3.0)) == pytest.approx(-0.1)
    assert np.allclose(f.b_perp_integral(1.0, 3.0), [0.4, 0.0])
    with pytest.raises(ValueError):
        axial_from_constant(ConstantUniform(b_z=1.0))


def test_sum_field():
    a = ConstantUniform(e_z=1.0)
    b = AxialProfile(lambda z: 2 * z)
    s = SumField(a, b)
    assert s.e(np.array([0, 0, 3.0]))[2] == pytest.approx(7.0)
    assert not s.uniform and SumField(a, a).uniform
