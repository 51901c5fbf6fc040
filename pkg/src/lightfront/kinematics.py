"""Normalized light-front phase space and its rational maps to lab variables.

Units: every length is in micrometres.  Field quantities are stored already
multiplied by q/mc^2, so a normalized electric field has units 1/um, the
plasma coupling 4 pi e^2 n0 / mc^2 has units 1/um^2, momenta are u = p/mc and
energies are in units of mc^2.  The light-like coordinate is xi = ct - z.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import physical_constants

#: Classical electron radius e^2/mc^2 in micrometres.
R_E_UM = physical_constants["classical electron radius"][0] * 1e6
#: Electron rest energy in volts.
MC2_VOLT = physical_constants["electron mass energy equivalent in MeV"][0] * 1e6

#: s below this value is treated as a collapse of the parametrization.
S_COLLAPSE = 1e-10


class SFactorCollapse(ArithmeticError):
    """Raised when the s-factor is no longer safely positive."""


def plasma_coupling(n0_per_cm3: float) -> float:
    """Return M = 4 pi e^2 n0 / mc^2 = 4 pi r_e n0 in 1/um^2."""
    n0_per_um3 = n0_per_cm3 * 1e-12
    return 4.0 * np.pi * R_E_UM * n0_per_um3


def normalized_amplitude(a0: float, wavelength_um: float) -> float:
    """Peak of |q eps / mc^2| (1/um) for a pump with e a lambda / mc^2 = a0."""
    return a0 / wavelength_um


def kappa_from_plates(potential_volt: float, distance_um: float, charge_sign: int = -1) -> float:
    """kappa = -q V_p / (z_p mc^2) for the grating/plate device, in 1/um."""
    return -charge_sign * potential_volt / (distance_um * MC2_VOLT)


def _check_s(s):
    s = np.asarray(s, dtype=float)
    if np.any(~(s >= S_COLLAPSE)):
        raise SFactorCollapse(f"s-factor collapse: min s = {np.min(s):.3e}")
    return s


@dataclass(frozen=True)
class XiState:
    """Phase point parametrized by xi.

    Fields may be scalars or arrays; ``x_perp`` and ``u_perp`` carry the two
    transverse components on their first axis.
    """

    xi: np.ndarray
    x_perp: np.ndarray
    z: np.ndarray
    u_perp: np.ndarray
    s: np.ndarray

    @classmethod
    def rest(cls, xi=0.0, x_perp=(0.0, 0.0), z=0.0) -> "XiState":
        return cls(float(xi), np.asarray(x_perp, float), float(z), np.zeros(2), 1.0)

    @classmethod
    def from_lab(cls, xi, x, u) -> "XiState":
        """Build from position x (3,) and u = p/mc (3,); s = gamma - u_z."""
        x = np.asarray(x, float)
        u = np.asarray(u, float)
        gamma = np.sqrt(1.0 + np.sum(u**2, axis=0))
        return cls(xi, x[:2], x[2], u[:2], gamma - u[2])

    @property
    def v(self):
        return np.sum(np.asarray(self.u_perp) ** 2, axis=0)


@dataclass(frozen=True)
class CanonicalState:
    """Position and canonical momenta conjugate to x in the xi-action (units mc^2)."""

    x: np.ndarray
    Pi: np.ndarray


def derive_lab(state: XiState):
    """Lab observables of a light-front state.

    Returns
    -------
    gamma, u_z, beta, dxdxi
        ``beta`` and ``dxdxi`` are 3-vectors stacked on the first axis.
    """
    s = _check_s(state.s)
    u_perp = np.asarray(state.u_perp, float)
    v = np.sum(u_perp**2, axis=0)
    gamma = (1.0 + v + s * s) / (2.0 * s)
    u_z = gamma - s
    beta = np.concatenate([u_perp, np.asarray(u_z)[None]]) / gamma
    dzdxi = (1.0 + v) / (2.0 * s * s) - 0.5
    dxdxi = np.concatenate([u_perp / s, np.asarray(dzdxi)[None]])
    return gamma, u_z, beta, dxdxi


def hamiltonian(state: XiState, A0=0.0):
    """Normalized xi-Hamiltonian (1 + s^2 + |u_perp|^2)/(2s) + q A0/mc^2."""
    s = _check_s(state.s)
    v = np.sum(np.asarray(state.u_perp, float) ** 2, axis=0)
    return (1.0 + s * s + v) / (2.0 * s) + A0


def lab_mass_shell_residual(gamma, u_z, u_perp):
    return gamma**2 - u_z**2 - np.sum(np.asarray(u_perp, float) ** 2, axis=0) - 1.0


def mass_shell_residual(state: XiState):
    """gamma^2 - u_z^2 - |u_perp|^2 - 1 for the lab variables derived from ``state``."""
    gamma, u_z, _, _ = derive_lab(state)
    return lab_mass_shell_residual(gamma, u_z, state.u_perp)


def to_canonical(state: XiState, A0=0.0, A_perp=(0.0, 0.0), A_z=0.0) -> CanonicalState:
    """Canonical momenta from kinetic ones given normalized potentials q A / mc^2.

    u_perp = Pi_perp - A_perp and s = -Pi_z - A^-, with A^- = A0 - A_z.
    """
    A_perp = np.asarray(A_perp, float)
    Pi_perp = np.asarray(state.u_perp, float) + A_perp
    Pi_z = -np.asarray(state.s, float) - (A0 - A_z)
    x = np.concatenate([np.asarray(state.x_perp, float), np.atleast_1d(state.z)])
    return CanonicalState(x=x, Pi=np.concatenate([Pi_perp, np.atleast_1d(Pi_z)]))


def from_canonical(cstate: CanonicalState, xi, A0=0.0, A_perp=(0.0, 0.0), A_z=0.0) -> XiState:
    x = np.asarray(cstate.x, float)
    Pi = np.asarray(cstate.Pi, float)
    u_perp = Pi[:2] - np.asarray(A_perp, float)
    s = -Pi[2] - (A0 - A_z)
    return XiState(xi, x[:2], x[2], u_perp, s)
