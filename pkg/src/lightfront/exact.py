"""Closed-form solutions for uniform static fields with B_perp = k ^ E_perp.

All cases start at rest at the origin at ``xi0`` (default 0) and are built
from quadratures of the pump potential:

* zero static fields: s = 1, u_perp = -alpha, z = integral of |u_perp|^2 / 2;
* axial B (b = q B_z / mc^2): rotation kernel exp(i b (zeta - xi));
* axial E (kappa = q E_z / mc^2): s = 1 - kappa xi, kernel 1 / (1 - kappa zeta);
* general: kernel (1 - kappa zeta)^(1 + i b / kappa).

These double as oracles for the numerical integrators.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import Trajectory, energy_gain
from .fields import ConstantUniform
from .kinematics import S_COLLAPSE, SFactorCollapse
from .pump import ModulatedCarrier, Pump, ZeroPump
from .quadrature import CachedAntiderivative

#: Below this |kappa| or |b| (1/um) the simpler closed form is used.
LIMIT_SWITCH = 1e-12
#: Panel tolerance for the nested closed-form integrands; their rounding floor
#: sits near 1e-13 of the local magnitude.
QUAD_RTOL = 1e-12


@dataclass(frozen=True)
class ZeroStatic:
    pass


@dataclass(frozen=True)
class AxialB:
    b: float


@dataclass(frozen=True)
class AxialE:
    kappa: float


@dataclass(frozen=True)
class GeneralBzEz:
    """Uniform E_z = kappa, B_z = b, E_perp = e_perp and B_perp = k ^ E_perp."""

    kappa: float
    b: float
    e_perp: tuple = (0.0, 0.0)

    @property
    def b_perp(self):
        return (-self.e_perp[1], self.e_perp[0])

    @classmethod
    def from_field(cls, field: ConstantUniform) -> "GeneralBzEz":
        expected = (-field.e_perp[1], field.e_perp[0])
        if not np.allclose(field.b_perp, expected, rtol=0, atol=1e-15):
            raise ValueError("exact solutions need B_perp = k ^ E_perp")
        return cls(field.e_z, field.b_z, tuple(field.e_perp))


def case_field(case) -> ConstantUniform:
    """The uniform static field an exact case describes."""
    if isinstance(case, ZeroStatic):
        return ConstantUniform()
    if isinstance(case, AxialB):
        return ConstantUniform(b_z=case.b)
    if isinstance(case, AxialE):
        return ConstantUniform(e_z=case.kappa)
    return ConstantUniform(e_perp=tuple(case.e_perp), e_z=case.kappa, b_perp=case.b_perp, b_z=case.b)


def _normalize(case):
    """Dispatch removable limits to simpler cases."""
    if isinstance(case, GeneralBzEz) and not any(case.e_perp):
        small_k = abs(case.kappa) < LIMIT_SWITCH
        small_b = abs(case.b) < LIMIT_SWITCH
        if small_k and small_b:
            return ZeroStatic()
        if small_k:
            return AxialB(case.b)
        if small_b:
            return AxialE(case.kappa)
    if isinstance(case, AxialB) and abs(case.b) < LIMIT_SWITCH:
        return ZeroStatic()
    if isinstance(case, AxialE) and abs(case.kappa) < LIMIT_SWITCH:
        return ZeroStatic()
    return case


class _Closed:
    """Evaluates the closed-form state at arbitrary xi (dense output)."""

    def __init__(self, case, pump: Pump, xi0, xi1):
        self.case = case = _normalize(case)
        self.pump = pump
        self.xi0 = xi0
        g = case_field(case)
        self.kappa = g.e_z
        self.b = g.b_z
        self.e_perp = np.asarray(g.e_perp, float)
        if self.kappa > 0 and 1.0 - self.kappa * (xi1 - xi0) < S_COLLAPSE:
            raise SFactorCollapse(
                f"grid reaches the s = 0 singularity at xi = {xi0 + 1 / self.kappa:.6g}")
        self.alpha0 = pump.alpha(xi0) if not isinstance(pump, ZeroPump) else np.zeros(2)
        h = pump.max_step if np.isfinite(pump.max_step) else max((xi1 - xi0) / 200, 1e-3)
        if self.b:
            h = min(h, 2 * np.pi / abs(self.b) / 8)
        bps = tuple(pump.breakpoints)
        self._bps = bps
        self._h = h
        self.xi1 = xi1
        # X(xi) = x + i y = P(xi) * integral of Wc / P(zeta) / s(zeta)
        self.X_int = None
        self.X_int = CachedAntiderivative(self._x_integrand, xi0, xi1, h, bps, rtol=QUAD_RTOL)
        self.z_int = CachedAntiderivative(self._z_integrand, xi0, xi1, h, bps, rtol=QUAD_RTOL)
        self.e_int = CachedAntiderivative(self._e_integrand, xi0, xi1, h, bps, rtol=QUAD_RTOL)

    def s(self, xi):
        return 1.0 - self.kappa * (np.asarray(xi, float) - self.xi0)

    def w_perp(self, xi):
        xi = np.asarray(xi, float)
        w = self.alpha0.reshape((2,) + (1,) * xi.ndim) - self.pump.alpha(xi)
        if np.any(self.e_perp):
            w = w + (xi - self.xi0) * self.e_perp.reshape((2,) + (1,) * xi.ndim)
        return w

    def _rot(self, xi):
        """P(xi) = (1 - kappa xi)^(i b / kappa), or exp(-i b xi) when kappa -> 0."""
        d = np.asarray(xi, float) - self.xi0
        if not self.b:
            return np.ones_like(d, dtype=complex)
        if abs(self.kappa) < LIMIT_SWITCH:
            return np.exp(-1j * self.b * d)
        return np.exp(1j * self.b / self.kappa * np.log(1.0 - self.kappa * d))

    def _x_integrand(self, zeta):
        w = self.w_perp(zeta)
        return (w[0] + 1j * w[1]) / (self._rot(zeta) * self.s(zeta))

    def X(self, xi):
        if self.X_int is None:
            return np.zeros(np.shape(xi), complex)
        return self._rot(xi) * self.X_int(xi)

    def dX(self, xi):
        """x_perp' as a complex number: (w - i b X) / s."""
        w = self.w_perp(xi)
        return ((w[0] + 1j * w[1]) - 1j * self.b * self.X(xi)) / self.s(xi)

    def _z_integrand(self, zeta):
        kd = self.kappa * (np.asarray(zeta, float) - self.xi0)
        # 1/s^2 - 1 written without cancellation
        return 0.5 * (kd * (2.0 - kd) / (1.0 - kd) ** 2 + np.abs(self.dX(zeta)) ** 2)

    def u_perp(self, xi):
        U = self.s(xi) * self.dX(xi)
        return np.stack([U.real, U.imag])

    def _e_integrand(self, zeta):
        eps = self.pump.eval(zeta)
        u = self.u_perp(zeta)
        return (eps[0] * u[0] + eps[1] * u[1]) / self.s(zeta)

    def __call__(self, xi):
        xi = np.atleast_1d(np.asarray(xi, float))
        if np.any(xi < self.xi0 - 1e-9) or np.any(xi > self.xi1 + 1e-9):
            raise ValueError("xi outside the exact-solution span")
        X = self.X(xi)
        u = self.u_perp(xi)
        return np.vstack([X.real, X.imag, self.z_int(xi), u[0], u[1], self.s(xi), self.e_int(xi)])


def solve_exact(case, pump: Pump, xi_grid, xi0=None) -> Trajectory:
    """Evaluate the closed-form solution on ``xi_grid`` (rest at origin at xi0)."""
    xi_grid = np.asarray(xi_grid, float)
    if np.any(np.diff(xi_grid) <= 0):
        raise ValueError("xi_grid must be strictly increasing")
    xi0 = float(xi_grid[0]) if xi0 is None else float(xi0)
    closed = _Closed(case, pump, xi0, float(xi_grid[-1]))
    cols = closed(xi_grid)
    return Trajectory.from_columns(xi_grid, cols, closed, meta={"method": "exact", "case": closed.case})


def uz_closed_form(traj: Trajectory, kappa: float, xi0=0.0):
    """u_z = 1/(2 s) + s (|x_perp'|^2 - 1)/2 with s = 1 - kappa (xi - xi0)."""
    s = 1.0 - kappa * (traj.xi - xi0)
    dx2 = np.sum((traj.u_perp / s) ** 2, axis=0)
    return 1.0 / (2 * s) + s * (dx2 - 1.0) / 2


# --------------------------------------------------------------------------
# autoresonance


@dataclass
class AutoresonanceDiag:
    xi: np.ndarray
    W: np.ndarray
    ratio: np.ndarray
    energy_final: float
    predicted_ratio: float
    pulse_end: float
    exact: Trajectory

    @property
    def ratio_post(self) -> float:
        return float(self.ratio[self.xi >= self.pulse_end][-1])


def autoresonance_diag(pump: Pump, b: float, xi_grid=None, tail=None) -> AutoresonanceDiag:
    """Cyclotron-autoresonance diagnostics for a circularly polarized pump.

    W(xi) is the integral of the normalized envelope over k; past the pulse
    the ratio |x_perp'| / z' approaches 2 / (k W(l)) at resonance -b = k.
    """
    if isinstance(pump, ZeroPump):
        xi = np.linspace(0.0, 1.0, 3) if xi_grid is None else np.asarray(xi_grid, float)
        zeros = np.zeros_like(xi)
        traj = solve_exact(AxialB(b), pump, xi)
        return AutoresonanceDiag(xi, zeros, zeros, 0.0, np.inf, xi[0], traj)
    if not isinstance(pump, ModulatedCarrier) or not np.isclose(abs(pump.a1), abs(pump.a2)) \
            or pump.a1 == 0:
        raise ValueError("autoresonance needs a circularly polarized carrier")
    lo, hi = pump.extent
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("autoresonance needs a pump of finite length")
    if xi_grid is None:
        tail = (hi - lo) * 0.25 if tail is None else tail
        xi_grid = np.arange(lo, hi + tail, pump.max_step / 2)
    xi_grid = np.asarray(xi_grid, float)
    env = lambda x: pump.envelope_value(x) * abs(pump.a1) / pump.k
    W = CachedAntiderivative(env, lo, hi, pump.max_step)(xi_grid)
    traj = solve_exact(AxialB(b), pump, xi_grid, xi0=lo)
    dz = traj.u_z  # s = 1 so z' = u_z
    dxp = np.sqrt(np.sum(traj.u_perp**2, axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dz > 0, dxp / dz, np.inf)
    W_l = float(W[-1])
    predicted = 2.0 / (pump.k * W_l) if W_l > 0 else np.inf
    return AutoresonanceDiag(xi_grid, W, ratio, float(traj.energy_gain[-1]), predicted, hi, traj)


# --------------------------------------------------------------------------
# Lawson-Woodward corollary


class LWResult(NamedTuple):
    u_perp_f: np.ndarray
    energy_f: float
    peak_energy: float
    ratio: float
    suppressed: bool


def lawson_woodward_check(pump: Pump, n_samples: int = 20001, suppression=1e-6) -> LWResult:
    """Final transverse momentum and energy for zero static fields and rest start.

    u_perp_f = -alpha(+inf), E_f = |u_perp_f|^2 / 2; the in-pulse peak energy
    is max |alpha|^2 / 2 sampled over the pump extent.
    """
    if isinstance(pump, ZeroPump):
        return LWResult(np.zeros(2), 0.0, 0.0, 0.0, True)
    lo, hi = pump.extent
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("pump is not integrable")
    u_f = -pump.alpha(hi)
    e_f = 0.5 * float(u_f @ u_f)
    xi = np.linspace(lo, hi, n_samples)
    peak = 0.5 * float(np.max(np.sum(pump.alpha(xi) ** 2, axis=0)))
    ratio = e_f / peak if peak > 0 else 0.0
    return LWResult(u_f, e_f, peak, ratio, ratio < suppression)


# --------------------------------------------------------------------------
# kappa scan


@dataclass
class KappaScan:
    kappa: np.ndarray
    energy_f: np.ndarray

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.energy_f))

    @property
    def kappa_max(self) -> float:
        return float(self.kappa[self.argmax])

    @property
    def unimodal(self) -> bool:
        d = np.diff(self.energy_f)
        i = self.argmax
        return bool(np.all(d[:i] > 0) and np.all(d[i:] < 0))

    @property
    def interior_max(self) -> bool:
        return 0 < self.argmax < len(self.kappa) - 1

    def rows(self):
        return {"kappa_per_um": self.kappa, "E_f": self.energy_f}


def final_energy_axial_e(pump: Pump, kappa: float, xi0=None, xi1=None) -> float:
    """Energy gain across the pulse for uniform E_z, from the closed form."""
    lo, hi = pump.extent
    xi0 = lo if xi0 is None else xi0
    xi1 = hi if xi1 is None else xi1
    if kappa > 0 and 1.0 - kappa * (xi1 - xi0) < S_COLLAPSE:
        raise SFactorCollapse(f"kappa = {kappa:g} reaches the singularity before the pump ends")
    closed = _Closed(AxialE(kappa), pump, xi0, xi1)
    return float(closed.e_int.total)


def kappa_scan(pump: Pump, kappa_range, n_points: int, workers: int | None = None) -> KappaScan:
    """Final energy gain as a function of the uniform axial field kappa."""
    kappas = np.linspace(kappa_range[0], kappa_range[1], n_points)
    if 0.0 not in kappas and kappa_range[0] < 0 < kappa_range[1]:
        kappas = np.sort(np.append(kappas, 0.0))
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            energies = list(ex.map(lambda k: final_energy_axial_e(pump, k), kappas))
    else:
        energies = [final_energy_axial_e(pump, k) for k in kappas]
    return KappaScan(kappas, np.array(energies))
