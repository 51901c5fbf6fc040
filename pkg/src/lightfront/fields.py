"""Static parts of the field, pre-multiplied by q/mc^2 (units 1/um)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad


class StaticField:
    """``e(x)`` and ``b(x)`` return 3-vectors stacked on the first axis."""

    #: True when the field is uniform in space.
    uniform = False

    def e(self, x):
        raise NotImplementedError

    def b(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroField(StaticField):
    uniform = True

    def e(self, x):
        return np.zeros_like(np.asarray(x, float))

    def b(self, x):
        return np.zeros_like(np.asarray(x, float))


@dataclass(frozen=True)
class ConstantUniform(StaticField):
    """Uniform fields; ``e_z`` is the kappa of the exact solutions, ``b_z`` their b."""

    e_perp: tuple = (0.0, 0.0)
    e_z: float = 0.0
    b_perp: tuple = (0.0, 0.0)
    b_z: float = 0.0

    uniform = True

    @property
    def e_vec(self):
        return np.array([self.e_perp[0], self.e_perp[1], self.e_z], float)

    @property
    def b_vec(self):
        return np.array([self.b_perp[0], self.b_perp[1], self.b_z], float)

    def e(self, x):
        x = np.asarray(x, float)
        return np.broadcast_to(self.e_vec.reshape((3,) + (1,) * (x.ndim - 1)), x.shape).copy()

    def b(self, x):
        x = np.asarray(x, float)
        return np.broadcast_to(self.b_vec.reshape((3,) + (1,) * (x.ndim - 1)), x.shape).copy()

    @property
    def is_zero(self):
        return not (np.any(self.e_vec) or np.any(self.b_vec))


@dataclass(frozen=True, eq=False)
class AxialProfile(StaticField):
    """E_s = e_z(z) k and B_s = b_perp(z), the class with potentials A(t, z).

    ``b_perp_antiderivative(z)`` should return the integral of ``b_perp`` from
    0 to z; without it the reduced integrator falls back to adaptive quadrature.
    """

    e_z_of_z: Callable[[np.ndarray], np.ndarray]
    b_perp_of_z: Optional[Callable[[np.ndarray], np.ndarray]] = None
    b_perp_antiderivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    z_range: tuple = (-np.inf, np.inf)

    def _check(self, z):
        if np.any(z < self.z_range[0]) or np.any(z > self.z_range[1]):
            raise ValueError(f"static field evaluated outside its z-range {self.z_range}")

    def e(self, x):
        x = np.asarray(x, float)
        self._check(x[2])
        out = np.zeros_like(x)
        out[2] = self.e_z_of_z(x[2])
        return out

    def b(self, x):
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        if self.b_perp_of_z is not None:
            self._check(x[2])
            out[:2] = self.b_perp_of_z(x[2])
        return out

    def e_z(self, z):
        self._check(z)
        return self.e_z_of_z(z)

    def b_perp(self, z):
        if self.b_perp_of_z is None:
            return np.zeros((2,) + np.shape(z))
        return np.asarray(self.b_perp_of_z(z), float)

    def b_perp_integral(self, z0, z):
        """Integral of b_perp from z0 to z."""
        if self.b_perp_of_z is None:
            return np.zeros(2)
        if self.b_perp_antiderivative is not None:
            return np.asarray(self.b_perp_antiderivative(z), float) - np.asarray(
                self.b_perp_antiderivative(z0), float)
        return np.array([quad(lambda q: self.b_perp_of_z(q)[i], z0, z, epsabs=1e-14, epsrel=1e-13)[0]
                         for i in range(2)])


def axial_from_constant(field: ConstantUniform) -> AxialProfile:
    """View a uniform field with no transverse E and no axial B as an axial profile."""
    if np.any(field.e_perp) or field.b_z:
        raise ValueError("only E_z and B_perp fit the A(t, z) class")
    bx, by = field.b_perp
    return AxialProfile(lambda z: field.e_z * np.ones_like(np.asarray(z, float)),
                        (lambda z: np.stack([bx * np.ones_like(np.asarray(z, float)),
                                             by * np.ones_like(np.asarray(z, float))]))
                        if (bx or by) else None,
                        (lambda z: np.stack([bx * np.asarray(z, float), by * np.asarray(z, float)])))


class SumField(StaticField):
    """Superposition of static fields, e.g. a space-charge E_z plus a uniform B."""

    def __init__(self, *parts: StaticField):
        self.parts = tuple(parts)
        self.uniform = all(p.uniform for p in parts)

    def e(self, x):
        return sum(p.e(x) for p in self.parts)

    def b(self, x):
        return sum(p.b(x) for p in self.parts)

    def __repr__(self):
        return f"SumField{self.parts!r}"
