"""Direct time-domain Lorentz-force integration, used as an independent oracle.

du/dct = e + beta x b with the pump evaluated at the retarded argument
xi = ct - z(t): E_pump = (eps_x, eps_y, 0) and B_pump = k x E_pump.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import DEFAULT_ATOL, DEFAULT_RTOL, IntegrationFailure, Trajectory, state_at_time
from .fields import StaticField, ZeroField
from .kinematics import derive_lab
from .pump import Pump


@dataclass(frozen=True)
class TState:
    ct: float
    x: np.ndarray
    u: np.ndarray

    @classmethod
    def rest(cls, ct=0.0, x=(0.0, 0.0, 0.0)) -> "TState":
        return cls(float(ct), np.asarray(x, float), np.zeros(3))

    @property
    def gamma(self):
        return float(np.sqrt(1.0 + self.u @ self.u))


@dataclass
class TimeTrajectory:
    ct: np.ndarray
    x: np.ndarray          # (3, n)
    u: np.ndarray          # (3, n)
    dense: Callable
    nfev: int = 0
    nsteps: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def gamma(self):
        return np.sqrt(1.0 + np.sum(self.u**2, axis=0))

    @property
    def xi(self):
        return self.ct - self.x[2]

    def columns(self):
        return {"ct_um": self.ct, "x_um": self.x[0], "y_um": self.x[1], "z_um": self.x[2],
                "ux": self.u[0], "uy": self.u[1], "uz": self.u[2], "gamma": self.gamma}


class _Segments:
    def __init__(self, segs):
        self.segs = segs
        self.bounds = np.array([s[0] for s in segs] + [segs[-1][1]])

    def __call__(self, ct):
        ct = np.atleast_1d(np.asarray(ct, float))
        lo, hi = self.bounds[0], self.bounds[-1]
        if np.any(ct < lo - 1e-9 * max(1, abs(lo))) or np.any(ct > hi + 1e-9 * max(1, abs(hi))):
            raise ValueError(f"ct outside [{lo}, {hi}]")
        ct = np.clip(ct, lo, hi)
        idx = np.clip(np.searchsorted(self.bounds, ct, side="right") - 1, 0, len(self.segs) - 1)
        out = np.empty((6, len(ct)))
        for i in np.unique(idx):
            sel = idx == i
            out[:, sel] = self.segs[i][2](ct[sel])
        return out


def integrate_time(pump: Pump, field: StaticField, init: TState, t_span, rtol=DEFAULT_RTOL,
                   atol=DEFAULT_ATOL, max_step=None, ct_eval=None) -> TimeTrajectory:
    """Integrate x, u in lab time ct (um) with the same adaptive pair as the xi solver.

    Pump breakpoints are crossed as terminal events on ct - z - xi_b, after
    which integration restarts.
    """
    field = field or ZeroField()
    if max_step is None:
        # xi advances at most twice as fast as ct
        max_step = pump.max_step / 2 if np.isfinite(pump.max_step) else np.inf

    def rhs(_, y):
        x, u = y[:3], y[3:]
        gamma = np.sqrt(1.0 + u @ u)
        beta = u / gamma
        eps = pump.eval(_ - x[2])
        e = field.e(x) + np.array([eps[0], eps[1], 0.0])
        b = field.b(x) + np.array([-eps[1], eps[0], 0.0])
        return np.concatenate([beta, e + np.cross(beta, b)])

    bps = np.array(sorted(pump.breakpoints), float)
    y = np.concatenate([init.x, init.u]).astype(float)
    ct = float(init.ct)
    ct_end = float(t_span[1])
    segs, nodes, values = [], [], []
    nfev = nsteps = 0
    while ct < ct_end:
        xi_now = ct - y[2]
        upcoming = bps[bps > xi_now + 1e-12]
        events = None
        if len(upcoming):
            target = upcoming[0]

            def hit(t, yy, target=target):
                return t - yy[2] - target
            hit.terminal = True
            hit.direction = 1
            events = hit
        sol = solve_ivp(rhs, (ct, ct_end), y, method="RK45", rtol=rtol, atol=atol,
                        max_step=max_step, dense_output=True, events=events)
        nfev += sol.nfev
        nsteps += len(sol.t) - 1
        if sol.status == -1:
            raise IntegrationFailure(sol.message)
        segs.append((ct, sol.t[-1], sol.sol))
        keep = slice(0 if not nodes else 1, None)
        nodes.append(sol.t[keep])
        values.append(sol.y[:, keep])
        ct, y = float(sol.t[-1]), sol.y[:, -1]
        if sol.status == 0:
            break
    dense = _Segments(segs)
    t = np.concatenate(nodes)
    Y = np.concatenate(values, axis=1)
    if ct_eval is not None:
        t = np.asarray(ct_eval, float)
        Y = dense(t)
    return TimeTrajectory(t, Y[:3], Y[3:], dense, nfev, nsteps,
                          meta={"rtol": rtol, "atol": atol})


@dataclass
class ErrorReport:
    ct: np.ndarray
    max_rel: dict
    rms_rel: dict

    @property
    def worst(self) -> float:
        return max(self.max_rel[k] for k in ("x", "u"))

    def agrees(self, tol=1e-6) -> bool:
        return self.worst < tol


def _rel(a, b):
    """Errors of ``a`` against reference ``b``, scaled by the reference's max-abs per component."""
    scale = np.max(np.abs(b), axis=-1, keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    err = np.abs(a - b) / scale
    return float(np.max(err)), float(np.sqrt(np.mean(err**2)))


def compare(traj_xi: Trajectory, traj_t: TimeTrajectory, n_samples: int = 2001) -> ErrorReport:
    """Map the xi-domain solution to lab time and compare on a common ct grid."""
    lo = max(traj_xi.ct[0], traj_t.ct[0])
    hi = min(traj_xi.ct[-1], traj_t.ct[-1])
    if hi <= lo:
        raise ValueError("the two trajectories share no time interval")
    ct = np.linspace(lo, hi, n_samples)
    st = state_at_time(traj_xi, ct)
    gamma, u_z, _, _ = derive_lab(st)
    x_xi = np.vstack([st.x_perp, st.z])
    u_xi = np.vstack([st.u_perp, u_z])
    Y = traj_t.dense(ct)
    x_t, u_t = Y[:3], Y[3:]
    g_t = np.sqrt(1.0 + np.sum(u_t**2, axis=0))
    mx, mu, mg = _rel(x_xi, x_t), _rel(u_xi, u_t), _rel(gamma[None], g_t[None])
    return ErrorReport(ct, {"x": mx[0], "u": mu[0], "gamma": mg[0]},
                       {"x": mx[1], "u": mu[1], "gamma": mg[1]})
