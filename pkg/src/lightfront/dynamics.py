"""Single-particle dynamics with xi = ct - z as the independent variable.

The full system integrates (x_perp, z, u_perp, s) plus the accumulated energy
gain.  The A(t, z) class uses the transverse first integral and integrates
only (z, s), with x_perp and the energy gain carried along as quadratures.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import quadrature
from .fields import AxialProfile, ConstantUniform, StaticField, ZeroField, axial_from_constant
from .kinematics import S_COLLAPSE, SFactorCollapse, XiState, derive_lab, lab_mass_shell_residual
from .pump import Pump

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12

# state layout: x, y, z, ux, uy, s, energy gain
_NSTATE = 7


class IntegrationFailure(RuntimeError):
    pass


class _Piecewise:
    """Dense output glued from consecutive ``OdeSolution`` segments."""

    def __init__(self, segments, post=None):
        self.segments = segments  # list of (lo, hi, sol)
        self.bounds = np.array([seg[0] for seg in segments] + [segments[-1][1]])
        self.post = post

    @property
    def span(self):
        return self.bounds[0], self.bounds[-1]

    def __call__(self, xi):
        xi = np.atleast_1d(np.asarray(xi, float))
        lo, hi = self.span
        if np.any(xi < lo - 1e-9 * max(1.0, abs(lo))) or np.any(xi > hi + 1e-9 * max(1.0, abs(hi))):
            raise ValueError(f"xi outside trajectory span [{lo}, {hi}]")
        xi = np.clip(xi, lo, hi)
        idx = np.clip(np.searchsorted(self.bounds, xi, side="right") - 1, 0, len(self.segments) - 1)
        first = self.segments[0][2](xi[:1])
        out = np.empty((first.shape[0], len(xi)))
        for i in np.unique(idx):
            sel = idx == i
            out[:, sel] = self.segments[i][2](xi[sel])
        if self.post is not None:
            out = self.post(xi, out)
        return out


@dataclass
class Trajectory:
    """A solution sampled on an increasing xi grid, with dense output.

    ``dense(xi)`` returns the state columns (x, y, z, ux, uy, s, energy) at
    arbitrary xi inside the span.
    """

    xi: np.ndarray
    x_perp: np.ndarray
    z: np.ndarray
    u_perp: np.ndarray
    s: np.ndarray
    energy_gain: np.ndarray
    dense: Callable
    status: str = "completed"
    message: str = ""
    nfev: int = 0
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_columns(cls, xi, cols, dense, **kw):
        return cls(xi=np.asarray(xi, float), x_perp=cols[0:2], z=cols[2], u_perp=cols[3:5],
                   s=cols[5], energy_gain=cols[6], dense=dense, **kw)

    @property
    def states(self) -> XiState:
        return XiState(self.xi, self.x_perp, self.z, self.u_perp, self.s)

    def state_at(self, xi) -> XiState:
        cols = self.dense(xi)
        return XiState(np.asarray(xi, float), cols[0:2], cols[2], cols[3:5], cols[5])

    @property
    def span(self):
        return float(self.xi[0]), float(self.xi[-1])

    @property
    def gamma(self):
        return (1.0 + np.sum(self.u_perp**2, axis=0) + self.s**2) / (2.0 * self.s)

    @property
    def u_z(self):
        return self.gamma - self.s

    @property
    def beta(self):
        return derive_lab(self.states)[2]

    @property
    def ct(self):
        return self.xi + self.z

    @property
    def v(self):
        return np.sum(self.u_perp**2, axis=0)

    def mass_shell_residual(self):
        return lab_mass_shell_residual(self.gamma, self.u_z, self.u_perp)

    def final(self) -> XiState:
        return XiState(self.xi[-1], self.x_perp[:, -1], self.z[-1], self.u_perp[:, -1], self.s[-1])

    def columns(self):
        """Rows for the trajectory CSV schema."""
        return {
            "xi_um": self.xi, "x_um": self.x_perp[0], "y_um": self.x_perp[1], "z_um": self.z,
            "ux": self.u_perp[0], "uy": self.u_perp[1], "uz": self.u_z, "s": self.s,
            "gamma": self.gamma, "ct_um": self.ct, "energy_gain": self.energy_gain,
        }


def _segments(xi0, xi1, breakpoints):
    edges = [xi0] + [b for b in sorted(breakpoints) if xi0 < b < xi1] + [xi1]
    return list(zip(edges[:-1], edges[1:]))


def _collapse_event(ix):
    def event(_, y):
        return y[ix] - S_COLLAPSE
    event.terminal = True
    event.direction = -1
    return event


def _run(rhs, y0, xi_span, breakpoints, rtol, atol, max_step, s_index, method="RK45"):
    """Integrate piecewise between breakpoints; returns (nodes, values, dense, status, nfev)."""
    y = np.asarray(y0, float)
    nodes, values, segments = [], [], []
    status, message, nfev = "completed", "", 0
    for lo, hi in _segments(xi_span[0], xi_span[1], breakpoints):
        sol = solve_ivp(rhs, (lo, hi), y, method=method, rtol=rtol, atol=atol,
                        max_step=max_step, dense_output=True, events=_collapse_event(s_index))
        nfev += sol.nfev
        if sol.status == -1:
            raise IntegrationFailure(sol.message)
        end = sol.t[-1]
        segments.append((lo, end, sol.sol))
        keep = slice(0 if not nodes else 1, None)
        nodes.append(sol.t[keep])
        values.append(sol.y[:, keep])
        y = sol.y[:, -1]
        if sol.status == 1:
            status = "s-collapse"
            message = f"s fell below {S_COLLAPSE:g} at xi = {end:.6g}"
            break
    return np.concatenate(nodes), np.concatenate(values, axis=1), segments, status, message, nfev


def _resample(nodes, values, dense, xi_eval, status):
    if xi_eval is None:
        return nodes, values
    xi_eval = np.asarray(xi_eval, float)
    if status != "completed":
        xi_eval = xi_eval[xi_eval <= nodes[-1]]
    return xi_eval, dense(xi_eval)


def _default_max_step(pump, max_step):
    if max_step is not None:
        return max_step
    return pump.max_step if np.isfinite(pump.max_step) else np.inf


def _initial_vector(init: XiState, energy=0.0):
    return np.array([init.x_perp[0], init.x_perp[1], init.z, init.u_perp[0], init.u_perp[1],
                     init.s, energy], float)


def integrate_general(pump: Pump, field: StaticField, init: XiState, xi_span, rtol=DEFAULT_RTOL,
                      atol=DEFAULT_ATOL, xi_eval=None, max_step=None, method="RK45") -> Trajectory:
    """Integrate the full xi-domain equations of motion.

    x_perp' = u_perp/s, z' = (1 + |u_perp|^2)/(2 s^2) - 1/2,
    u_perp' = (1 + z') e_perp + (x' ^ b)_perp + eps_perp(xi),
    s' = -[e_z - x_perp' . e_perp + (x_perp' ^ b_perp)_z],
    energy' = eps_perp . u_perp / s.

    Integration restarts at the pump's breakpoints.  If s drops below the
    collapse threshold the run stops there and ``status`` says so.
    """
    if init.s < S_COLLAPSE:
        raise SFactorCollapse("initial s-factor is not positive")
    field = field or ZeroField()

    def rhs(xi, y):
        ux, uy, s = y[3], y[4], y[5]
        pos = y[:3]
        e = field.e(pos)
        b = field.b(pos)
        eps = pump.eval(xi)
        dx, dy = ux / s, uy / s
        dz = (1.0 + ux * ux + uy * uy) / (2.0 * s * s) - 0.5
        dux = (1.0 + dz) * e[0] + (dy * b[2] - dz * b[1]) + eps[0]
        duy = (1.0 + dz) * e[1] + (dz * b[0] - dx * b[2]) + eps[1]
        ds = -(e[2] - dx * e[0] - dy * e[1] + (dx * b[1] - dy * b[0]))
        de = eps[0] * dx + eps[1] * dy
        return [dx, dy, dz, dux, duy, ds, de]

    nodes, values, segments, status, message, nfev = _run(
        rhs, _initial_vector(init), xi_span, pump.breakpoints, rtol, atol,
        _default_max_step(pump, max_step), 5, method)
    dense = _Piecewise(segments)
    xi, cols = _resample(nodes, values, dense, xi_eval, status)
    return Trajectory.from_columns(xi, cols, dense, status=status, message=message, nfev=nfev,
                                   meta={"method": "general", "rtol": rtol, "atol": atol})


@dataclass
class FirstIntegrals:
    """Integration constants of the uniform-field first integrals.

    ``w(xi) = K - alpha(xi) + xi e_s`` (3-vector on the first axis).  With
    b = b_z the transverse momenta and s follow algebraically from position:
    u_x = (e_x - b_y) z + b y + w_x, u_y = (e_y + b_x) z - b x + w_y,
    s = (e_x - b_y) x + (e_y + b_x) y - w_z.
    """

    K: np.ndarray
    field: ConstantUniform
    pump: Pump

    def w(self, xi):
        xi = np.asarray(xi, float)
        alpha = self.pump.alpha(xi)
        e = self.field.e_vec.reshape((3,) + (1,) * xi.ndim)
        K = self.K.reshape((3,) + (1,) * xi.ndim)
        return K - np.concatenate([alpha, np.zeros((1,) + xi.shape)]) + xi * e

    def u_perp_and_s(self, xi, x_perp, z):
        f = self.field
        w = self.w(xi)
        cx = f.e_perp[0] - f.b_perp[1]
        cy = f.e_perp[1] + f.b_perp[0]
        b = f.b_z
        ux = cx * z + b * x_perp[1] + w[0]
        uy = cy * z - b * x_perp[0] + w[1]
        s = cx * x_perp[0] + cy * x_perp[1] - w[2]
        return np.stack([ux, uy]), s


def first_integrals(field: ConstantUniform, pump: Pump, init: XiState, xi0=None) -> FirstIntegrals:
    """Solve the uniform-field first integrals for K at ``xi0`` (default ``init.xi``)."""
    xi0 = init.xi if xi0 is None else xi0
    f = field
    cx = f.e_perp[0] - f.b_perp[1]
    cy = f.e_perp[1] + f.b_perp[0]
    b = f.b_z
    alpha = pump.alpha(xi0)
    x, y = init.x_perp
    z = init.z
    Kx = init.u_perp[0] - cx * z - b * y + alpha[0] - xi0 * f.e_perp[0]
    Ky = init.u_perp[1] - cy * z + b * x + alpha[1] - xi0 * f.e_perp[1]
    Kz = cx * x + cy * y - init.s - xi0 * f.e_z
    return FirstIntegrals(np.array([Kx, Ky, Kz], float), field, pump)


def integrate_reduced_Az(pump: Pump, field, init: XiState, xi_span, rtol=DEFAULT_RTOL,
                         atol=DEFAULT_ATOL, xi_eval=None, max_step=None, method="RK45") -> Trajectory:
    """Integrate the (z, s) system for fields of the A(t, z) class.

    u_perp(xi, z) = K_perp - alpha(xi) + k ^ G(z) with G the integral of b_perp
    from z0, v = |u_perp|^2 and

    z' = (1 + v)/(2 s^2) - 1/2,   s' = -e_z(z) + (dv/dz) / (2 s).

    x_perp and the energy gain are carried as passive quadratures.
    """
    if isinstance(field, ZeroField) or field is None:
        field = AxialProfile(lambda z: np.zeros_like(np.asarray(z, float)))
    elif isinstance(field, ConstantUniform):
        field = axial_from_constant(field)
    if init.s < S_COLLAPSE:
        raise SFactorCollapse("initial s-factor is not positive")
    xi0 = init.xi
    z0 = float(init.z)
    K = np.asarray(init.u_perp, float) + pump.alpha(xi0)
    has_b = field.b_perp_of_z is not None

    def u_perp_of(xi, z):
        u = K.reshape((2,) + (1,) * np.ndim(xi)) - pump.alpha(xi)
        if has_b:
            if np.ndim(z) == 0:
                G = field.b_perp_integral(z0, z)
            else:
                G = np.stack([field.b_perp_integral(z0, zz) for zz in np.ravel(z)], axis=1)
                G = G.reshape((2,) + np.shape(z))
            u = u + np.stack([-G[1], G[0]])
        return u

    def rhs(xi, y):
        z, s = y[0], y[1]
        u = u_perp_of(xi, z)
        v = u[0] ** 2 + u[1] ** 2
        dz = (1.0 + v) / (2.0 * s * s) - 0.5
        ds = -field.e_z(z)
        if has_b:
            b = field.b_perp(z)
            dv_dz = 2.0 * (-u[0] * b[1] + u[1] * b[0])
            ds = ds + dv_dz / (2.0 * s)
        eps = pump.eval(xi)
        return [dz, ds, u[0] / s, u[1] / s, (eps[0] * u[0] + eps[1] * u[1]) / s]

    y0 = [z0, init.s, init.x_perp[0], init.x_perp[1], 0.0]

    def expand(xi, red):
        # reduced columns (z, s, x, y, E) -> full layout
        u = u_perp_of(xi, red[0])
        return np.vstack([red[2], red[3], red[0], u[0], u[1], red[1], red[4]])

    nodes, values, segments, status, message, nfev = _run(
        rhs, y0, xi_span, pump.breakpoints, rtol, atol, _default_max_step(pump, max_step), 1, method)
    dense = _Piecewise(segments, post=expand)
    if xi_eval is None:
        xi, cols = nodes, expand(nodes, values)
    else:
        xi, cols = _resample(nodes, values, dense, xi_eval, status)
    return Trajectory.from_columns(xi, cols, dense, status=status, message=message, nfev=nfev,
                                   meta={"method": "reduced", "rtol": rtol, "atol": atol})


def energy_gain(traj: Trajectory, pump: Pump, xi0=None, xi1=None):
    """Normalized energy gain: integral of eps_perp . u_perp / s over [xi0, xi1].

    Evaluated by panel quadrature on the trajectory's dense output, not from
    the integrated energy column.
    """
    lo, hi = traj.span
    xi0 = lo if xi0 is None else xi0
    xi1 = hi if xi1 is None else xi1
    tol = 1e-9 * max(1.0, abs(lo), abs(hi))
    if xi0 < lo - tol or xi1 > hi + tol or xi1 < xi0:
        raise ValueError(f"[{xi0}, {xi1}] is not inside the trajectory span [{lo}, {hi}]")

    def integrand(x):
        shape = x.shape
        cols = traj.dense(x.ravel())
        eps = pump.eval(x.ravel())
        return ((eps[0] * cols[3] + eps[1] * cols[4]) / cols[5]).reshape(shape)

    h = pump.max_step if np.isfinite(pump.max_step) else (xi1 - xi0) / 50 or 1.0
    bps = tuple(pump.breakpoints) + tuple(getattr(traj.dense, "bounds", ()))
    return float(quadrature.integrate(integrand, xi0, xi1, h, bps, rtol=1e-10))


def time_of(traj: Trajectory, xi):
    """ct (um) at which the particle reaches light-front time xi."""
    cols = traj.dense(xi)
    out = np.asarray(xi, float) + cols[2]
    return out if np.ndim(xi) else float(out[0])


def xi_at_time(traj: Trajectory, ct, xtol=1e-13, max_iter=100):
    """Invert ct = xi + z(xi) by safeguarded Newton iteration on the dense output.

    The map is strictly increasing (d ct/d xi = gamma/s > 0), so each root is
    unique and bracketed by the trajectory nodes.
    """
    ct = np.atleast_1d(np.asarray(ct, float))
    nodes_ct = traj.ct
    lo_ct, hi_ct = nodes_ct[0], nodes_ct[-1]
    slack = 1e-9 * max(1.0, abs(lo_ct), abs(hi_ct))
    if np.any(ct < lo_ct - slack) or np.any(ct > hi_ct + slack):
        raise ValueError(f"ct outside trajectory range [{lo_ct}, {hi_ct}]")
    ct = np.clip(ct, lo_ct, hi_ct)
    j = np.clip(np.searchsorted(nodes_ct, ct, side="right") - 1, 0, len(traj.xi) - 2)
    a = traj.xi[j].copy()
    b = traj.xi[j + 1].copy()
    x = a + (ct - nodes_ct[j]) / (nodes_ct[j + 1] - nodes_ct[j]) * (b - a)
    for _ in range(max_iter):
        cols = traj.dense(x)
        g = x + cols[2] - ct
        a = np.where(g < 0, x, a)
        b = np.where(g > 0, x, b)
        s = cols[5]
        v = cols[3] ** 2 + cols[4] ** 2
        slope = (1.0 + v) / (2 * s * s) + 0.5
        step = x - g / slope
        bad = (step <= a) | (step >= b)
        new = np.where(bad, 0.5 * (a + b), step)
        done = np.abs(new - x) <= xtol * np.maximum(1.0, np.abs(x))
        x = new
        if np.all(done | (g == 0)):
            break
    return x


def state_at_time(traj: Trajectory, ct) -> XiState:
    """The light-front state reached at lab time ct."""
    xi = xi_at_time(traj, ct)
    state = traj.state_at(xi)
    if np.ndim(ct) == 0:
        return XiState(float(xi[0]), state.x_perp[:, 0], float(state.z[0]),
                       state.u_perp[:, 0], float(state.s[0]))
    return state
