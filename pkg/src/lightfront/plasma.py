"""Plane vacuum-plasma problem in light-front variables.

A cold electron fluid initially at rest fills z >= 0 with density n(Z) over a
fixed ion background.  Because every fluid element keeps its Lagrangian label
Z, the longitudinal space-charge field seen by element Z depends only on its
own displacement Delta = z_e - Z:

    e_z(z_e) = -4 pi r_e [N(z_e) - N(Z)],   N(Z) = integral of n from 0 to Z,

so each element obeys a decoupled ODE in xi.  With no static magnetic field
the transverse momentum is known from the pump potential and only (Delta, s)
are integrated:

    Delta' = (1 + v) / (2 s^2) - 1/2,   s' = 4 pi r_e [N(Z + Delta) - N(Z)].

For a step profile n = n0 the right-hand side is M Delta for every element
that stays inside the plasma, so all of them share one Cauchy problem.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .dynamics import DEFAULT_ATOL, DEFAULT_RTOL, IntegrationFailure, integrate_general
from .fields import AxialProfile, ConstantUniform, SumField
from .kinematics import R_E_UM, S_COLLAPSE, SFactorCollapse, XiState, plasma_coupling
from .pump import Pump, ZeroPump
from .quadrature import gauss_legendre

__all__ = [
    "StepDensity", "ProfileDensity", "Member", "PlasmaFamily", "PeriodEstimate", "Residual",
    "solve_family", "solve_step_cauchy", "invariant", "period_estimate", "quadrature_period",
    "aperp_residual", "default_Z_grid", "invariant_drift", "carrier_phase_sensitivity",
]

#: Default pass threshold for max|A_perp residual| / max|alpha|.
RESIDUAL_THRESHOLD = 0.2


# --------------------------------------------------------------------------
# densities


@dataclass(frozen=True)
class StepDensity:
    """n(Z) = n0 for Z >= 0 and 0 in the vacuum half-space."""

    n0_per_cm3: float

    def __post_init__(self):
        if not self.n0_per_cm3 >= 0:
            raise ValueError("density must be non-negative")

    @property
    def n0(self) -> float:
        """Density in 1/um^3."""
        return self.n0_per_cm3 * 1e-12

    @property
    def M(self) -> float:
        return plasma_coupling(self.n0_per_cm3)

    is_step = True

    def n(self, Z):
        Z = np.asarray(Z, float)
        return np.where(Z >= 0, self.n0, 0.0)

    def N(self, Z):
        return self.n0 * np.maximum(np.asarray(Z, float), 0.0)

    def coupling(self, Z, delta):
        """4 pi r_e [N(Z + Delta) - N(Z)] in 1/um."""
        return self.M * (np.maximum(Z + delta, 0.0) - max(Z, 0.0))


class ProfileDensity:
    """Tabulated n(Z) (1/cm^3), monotone-cubic between samples.

    The last sample is held constant beyond the table, so the profile
    describes a semi-infinite plasma with a shaped surface layer.
    """

    is_step = False

    def __init__(self, Z_um, n_per_cm3):
        Z = np.asarray(Z_um, float)
        n = np.asarray(n_per_cm3, float)
        if Z.ndim != 1 or Z.shape != n.shape or len(Z) < 2:
            raise ValueError("density table needs matching 1-D Z and n columns")
        if np.any(np.diff(Z) <= 0) or Z[0] < 0:
            raise ValueError("density table Z must start at >= 0 and increase")
        if np.any(n < 0):
            raise ValueError("density must be non-negative")
        self.Z_table = Z
        self.n_table = n * 1e-12
        self._interp = PchipInterpolator(Z, self.n_table, extrapolate=False)
        self._anti = self._interp.antiderivative()
        self._N_end = float(self._anti(Z[-1]))
        self.n0 = float(self.n_table.max())
        self.M = 4 * np.pi * R_E_UM * self.n0

    def n(self, Z):
        Z = np.asarray(Z, float)
        inside = np.nan_to_num(self._interp(np.clip(Z, self.Z_table[0], self.Z_table[-1])))
        out = np.where(Z < self.Z_table[0], 0.0, inside)
        return np.where(Z > self.Z_table[-1], self.n_table[-1], out)

    def N(self, Z):
        Z = np.asarray(Z, float)
        inner = self._anti(np.clip(Z, self.Z_table[0], self.Z_table[-1]))
        tail = self.n_table[-1] * np.maximum(Z - self.Z_table[-1], 0.0)
        return np.where(Z <= self.Z_table[0], 0.0, inner + tail)

    def coupling(self, Z, delta):
        return 4 * np.pi * R_E_UM * (self.N(Z + delta) - self.N(Z))

    def __repr__(self):
        return f"ProfileDensity(<{len(self.Z_table)} samples>)"


def default_Z_grid(pump: Pump, n_points: int = 64):
    """0 plus log-spaced labels up to three pulse lengths."""
    lo, hi = pump.extent
    length = hi - lo if np.isfinite(hi - lo) and hi > lo else 1.0
    return np.concatenate([[0.0], np.geomspace(3 * length * 1e-3, 3 * length, n_points - 1)])


# --------------------------------------------------------------------------
# single fluid element


@dataclass
class Member:
    """One fluid element: Delta(xi) = z_e - Z and s(xi) on ``xi`` plus dense output.

    ``dense(xi)`` returns rows (Delta, s, ux, uy).
    """

    Z: float
    xi: np.ndarray
    Delta: np.ndarray
    s: np.ndarray
    u_perp: np.ndarray
    dense: Callable
    status: str = "completed"
    message: str = ""
    M: float = 0.0
    pulse_end: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def v(self):
        return np.sum(self.u_perp**2, axis=0)

    @property
    def gamma(self):
        return (1.0 + self.v + self.s**2) / (2.0 * self.s)

    @property
    def uz(self):
        return self.gamma - self.s

    @property
    def z_e(self):
        return self.Z + self.Delta

    @property
    def ct(self):
        return self.xi + self.z_e

    @property
    def valid(self) -> bool:
        """False once the element has left the plasma (z_e <= 0 after the start)."""
        if self.Z < 0:
            return False
        later = self.xi > self.xi[0]
        return bool(np.all(self.z_e[later] > 0))

    def mass_shell_residual(self):
        g, uz = self.gamma, self.uz
        return g * g - uz * uz - self.v - 1.0

    def columns(self):
        return {"xi_um": self.xi, "Delta_um": self.Delta, "s": self.s, "gamma": self.gamma,
                "uz": self.uz, "v": self.v}


class _Dense:
    def __init__(self, segments, pump, alpha0):
        self.segments = segments
        self.bounds = np.array([seg[0] for seg in segments] + [segments[-1][1]])
        self.pump = pump
        self.alpha0 = alpha0

    def __call__(self, xi):
        xi = np.atleast_1d(np.asarray(xi, float))
        lo, hi = self.bounds[0], self.bounds[-1]
        if np.any(xi < lo - 1e-9 * max(1, abs(lo))) or np.any(xi > hi + 1e-9 * max(1, abs(hi))):
            raise ValueError(f"xi outside solved span [{lo}, {hi}]")
        xi = np.clip(xi, lo, hi)
        idx = np.clip(np.searchsorted(self.bounds, xi, side="right") - 1, 0, len(self.segments) - 1)
        out = np.empty((4, len(xi)))
        for i in np.unique(idx):
            sel = idx == i
            out[:2, sel] = self.segments[i][2](xi[sel])
        out[2:] = -(self.pump.alpha(xi) - self.alpha0[:, None])
        return out


def _collapse(_, y):
    return y[1] - S_COLLAPSE


_collapse.terminal = True
_collapse.direction = -1


def _integrate_member(pump, coupling, xi_span, rtol, atol, xi_eval, Z, M):
    """Integrate (Delta, s) from rest; max step is only bounded inside the pulse."""
    xi0, xi1 = map(float, xi_span)
    if xi1 <= xi0:
        raise ValueError("xi_span must be increasing")
    lo, hi = pump.extent
    alpha0 = np.asarray(pump.alpha(xi0), float).reshape(2)
    inside = np.isfinite(pump.max_step)
    edges = sorted({xi0, xi1, *[b for b in (*pump.breakpoints, lo, hi)
                                if np.isfinite(b) and xi0 < b < xi1]})

    def rhs(xi, y):
        a = pump.alpha(xi).reshape(2) - alpha0
        d, s = y
        return [(1.0 + a @ a) / (2.0 * s * s) - 0.5, coupling(d)]

    y = np.array([0.0, 1.0])
    segments, nodes, values = [], [], []
    status, message = "completed", ""
    for a, b in zip(edges[:-1], edges[1:]):
        in_pulse = inside and a < hi and b > lo
        sol = solve_ivp(rhs, (a, b), y, method="RK45", rtol=rtol, atol=atol, dense_output=True,
                        max_step=pump.max_step if in_pulse else np.inf, events=_collapse)
        if sol.status == -1:
            raise IntegrationFailure(sol.message)
        segments.append((a, sol.t[-1], sol.sol))
        keep = slice(0 if not nodes else 1, None)
        nodes.append(sol.t[keep])
        values.append(sol.y[:, keep])
        y = sol.y[:, -1]
        if sol.status == 1:
            status = "s-collapse"
            message = f"s fell below {S_COLLAPSE:g} at xi = {sol.t[-1]:.6g}"
            break
    dense = _Dense(segments, pump, alpha0)
    xi = np.concatenate(nodes)
    if xi_eval is not None:
        xi = np.asarray(xi_eval, float)
        xi = xi[xi <= segments[-1][1]]
    rows = dense(xi)
    return Member(Z=Z, xi=xi, Delta=rows[0], s=rows[1], u_perp=rows[2:], dense=dense,
                  status=status, message=message, M=M, pulse_end=float(hi),
                  meta={"rtol": rtol, "atol": atol})


class _GeneralDense:
    """Adapter from a full trajectory's dense output to rows (Delta, s, ux, uy)."""

    def __init__(self, traj_dense, Z):
        self.traj_dense = traj_dense
        self.Z = Z
        self.bounds = traj_dense.bounds

    def __call__(self, xi):
        cols = self.traj_dense(xi)
        return np.vstack([cols[2] - self.Z, cols[5], cols[3], cols[4]])


def _member_with_b(pump, density, Z, b_s, xi_span, rtol, atol, xi_eval):
    """Full light-front system when a uniform static B couples the transverse motion."""
    ez = AxialProfile(lambda z: -density.coupling(Z, np.asarray(z, float) - Z))
    field_ = SumField(ez, ConstantUniform(b_perp=tuple(b_s[:2]), b_z=float(b_s[2])))
    init = XiState.rest(xi_span[0], (0.0, 0.0), Z)
    traj = integrate_general(pump, field_, init, xi_span, rtol, atol, xi_eval=xi_eval)
    dense = _GeneralDense(traj.dense, Z)
    return Member(Z=Z, xi=traj.xi, Delta=traj.z - Z, s=traj.s, u_perp=traj.u_perp, dense=dense,
                  status=traj.status, message=traj.message, M=density.M,
                  pulse_end=float(pump.extent[1]), meta={"rtol": rtol, "atol": atol,
                                                         "x_perp": traj.x_perp})


# --------------------------------------------------------------------------
# family


@dataclass
class PlasmaFamily:
    Z_grid: np.ndarray
    members: list
    density: object
    pump: Pump
    xi_grid: np.ndarray
    b_s: Optional[tuple] = None

    @property
    def valid(self):
        return np.array([m.valid for m in self.members])

    @property
    def max_gamma(self):
        return np.array([float(np.max(m.gamma)) for m in self.members])

    @property
    def universal(self) -> bool:
        """Step density without static B: every element shares one Cauchy problem."""
        return bool(getattr(self.density, "is_step", False)) and self.b_s is None

    def universality_deviation(self) -> float:
        """Max spread of (Delta, s) across valid members on their common grid."""
        good = [m for m in self.members if m.valid]
        if len(good) < 2:
            return 0.0
        n = min(len(m.xi) for m in good)
        D = np.array([m.Delta[:n] for m in good])
        S = np.array([m.s[:n] for m in good])
        return float(max(np.max(np.ptp(D, axis=0)), np.max(np.ptp(S, axis=0))))

    def summary_rows(self, xi_H=np.nan):
        return {"Z_um": self.Z_grid, "valid": self.valid.astype(int), "max_gamma": self.max_gamma,
                "xi_H_um": np.full(len(self.Z_grid), xi_H)}


def solve_family(pump: Pump, density, Z_grid=None, xi_span=None, rtol=DEFAULT_RTOL,
                 atol=DEFAULT_ATOL, b_s=None, xi_eval=None, workers=None) -> PlasmaFamily:
    """Solve the decoupled element equations for every label in ``Z_grid``.

    Elements start at rest at ``xi_span[0]``, which should precede the pulse.
    A non-zero uniform ``b_s`` (3-vector, 1/um) switches to the full system.
    Elements that leave the plasma keep integrating with the exact N and are
    flagged invalid rather than dropped.
    """
    Z_grid = default_Z_grid(pump) if Z_grid is None else np.asarray(Z_grid, float)
    if np.any(Z_grid < 0):
        raise ValueError("Lagrangian labels start at the plasma surface Z = 0")
    lo, hi = pump.extent
    if xi_span is None:
        if not np.isfinite(hi):
            raise ValueError("xi_span is required for a pump without finite extent")
        xi_span = (min(lo, 0.0), hi + 4 * (hi - lo))
    if xi_eval is None:
        step = pump.max_step / 2 if np.isfinite(pump.max_step) else (xi_span[1] - xi_span[0]) / 2000
        xi_eval = np.arange(xi_span[0], xi_span[1] + 0.5 * step, step)
        xi_eval[-1] = min(xi_eval[-1], xi_span[1])
    if b_s is not None and not np.any(b_s):
        b_s = None
    if b_s is not None:
        b_s = tuple(float(c) for c in np.broadcast_to(np.asarray(b_s, float), (3,)))

    def one(Z):
        if b_s is None:
            return _integrate_member(pump, lambda d: density.coupling(Z, d), xi_span, rtol, atol,
                                     xi_eval, float(Z), density.M)
        return _member_with_b(pump, density, float(Z), b_s, xi_span, rtol, atol, xi_eval)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            members = list(ex.map(one, Z_grid))
    else:
        members = [one(Z) for Z in Z_grid]
    return PlasmaFamily(Z_grid, members, density, pump, np.asarray(xi_eval), b_s)


def solve_step_cauchy(pump: Pump, M: float, xi_span, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                      xi_eval=None) -> Member:
    """Delta' = (1 + v)/(2 s^2) - 1/2, s' = M Delta from Delta = 0, s = 1."""
    if M < 0:
        raise ValueError("plasma coupling must be non-negative")
    return _integrate_member(pump, lambda d: M * d, xi_span, rtol, atol, xi_eval, np.inf, M)


# --------------------------------------------------------------------------
# post-pulse diagnostics


def invariant(member: Member, xi=None):
    """C = (1 + v)/(2 s) + s/2 + M Delta^2/2, conserved where the pump vanishes."""
    if xi is None:
        D, s, v = member.Delta, member.s, member.v
    else:
        rows = member.dense(xi)
        D, s, v = rows[0], rows[1], rows[2] ** 2 + rows[3] ** 2
    return (1.0 + v) / (2.0 * s) + 0.5 * s + 0.5 * member.M * D * D


def quadrature_period(C: float, v_c: float, M: float) -> float:
    """Period of the post-pulse orbit with invariant C, computed by quadrature.

    With s = C - r cos(theta), r = sqrt(C^2 - 1 - v_c), the period is
    (2/sqrt(M)) * integral over [0, pi] of sqrt(C + r cos(theta)).
    """
    if M <= 0:
        raise ValueError("no oscillation without plasma coupling")
    r2 = C * C - (1.0 + v_c)
    r = np.sqrt(max(r2, 0.0))
    nodes = np.linspace(0.0, np.pi, 65)
    val = gauss_legendre(lambda th: np.sqrt(C + r * np.cos(th)), nodes[:-1], nodes[1:])
    return float(2.0 / np.sqrt(M) * np.sum(val))


class PeriodEstimate(NamedTuple):
    xi_H: float
    maxima: np.ndarray
    cycles: int
    quadrature: float

    @property
    def mismatch(self) -> float:
        return abs(self.xi_H - self.quadrature) / self.quadrature


def _maxima(member: Member, after_xi):
    """xi of the maxima of s: downward zero crossings of Delta (s' has the sign of Delta)."""
    xi = member.xi
    sel = xi >= after_xi
    xs, D = xi[sel], member.Delta[sel]
    idx = np.nonzero((D[:-1] > 0) & (D[1:] <= 0))[0]
    f = lambda x: float(member.dense(x)[0, 0])
    out = []
    for i in idx:
        a, b = xs[i], xs[i + 1]
        out.append(b if f(b) == 0 else brentq(f, a, b, xtol=1e-13, rtol=1e-15))
    return np.array(out)


def period_estimate(member: Member, after_xi=None) -> PeriodEstimate:
    """Post-pulse period from successive maxima of s, with a quadrature cross-check."""
    after_xi = member.pulse_end if after_xi is None else after_xi
    if not np.isfinite(after_xi):
        raise ValueError("the pulse must end before the period can be measured")
    maxima = _maxima(member, after_xi)
    if len(maxima) < 2:
        raise ValueError(f"fewer than 2 maxima of s after xi = {after_xi:g}")
    cycles = len(maxima) - 1
    if cycles < 3:
        warnings.warn(f"period averaged over only {cycles} cycle(s)", RuntimeWarning, stacklevel=2)
    xi_H = float((maxima[-1] - maxima[0]) / cycles)
    probe = member.dense(np.array([maxima[0]]))
    v_c = float(probe[2, 0] ** 2 + probe[3, 0] ** 2)
    C = float(invariant(member, np.array([maxima[0]]))[0])
    return PeriodEstimate(xi_H, maxima, cycles, quadrature_period(C, v_c, member.M))


def invariant_drift(member: Member, after_xi=None):
    """Largest change of C within each post-pulse cycle, relative to C."""
    est = period_estimate(member, after_xi)
    drifts = []
    for a, b in zip(est.maxima[:-1], est.maxima[1:]):
        xs = np.linspace(a, b, 201)
        C = invariant(member, xs)
        drifts.append(float(np.ptp(C) / abs(C[0])))
    return np.array(drifts)


# --------------------------------------------------------------------------
# transverse-potential residual


@dataclass
class Residual:
    ratio: float
    ct: np.ndarray
    z: np.ndarray
    grid_ratio: np.ndarray
    max_alpha: float
    step: float
    ct_max: float
    threshold: float = RESIDUAL_THRESHOLD

    @property
    def passed(self) -> bool:
        return self.ratio < self.threshold

    def rows(self):
        C, Zg = np.meshgrid(self.ct, self.z, indexing="ij")
        return {"ct_um": C.ravel(), "z_um": Zg.ravel(), "ratio": self.grid_ratio.ravel()}


def _invert_light_cone(dense, targets, xi_lo, xi_hi):
    """Solve xi + Delta(xi) = T for each target (monotone: d/dxi > 1/2)."""
    T = np.asarray(targets, float)
    grid = np.linspace(xi_lo, xi_hi, max(2001, int((xi_hi - xi_lo) / 0.02)))
    Tg = grid + dense(grid)[0]
    x = np.interp(T, Tg, grid)
    for _ in range(50):
        rows = dense(x)
        g = x + rows[0] - T
        slope = (1.0 + rows[2] ** 2 + rows[3] ** 2) / (2 * rows[1] ** 2) + 0.5
        new = np.clip(x - g / slope, xi_lo, xi_hi)
        if np.all(np.abs(new - x) <= 1e-12 * np.maximum(1.0, np.abs(x))):
            x = new
            break
        x = new
    return x


def _beta_rows(rows):
    gam = (1.0 + rows[2] ** 2 + rows[3] ** 2 + rows[1] ** 2) / (2 * rows[1])
    return rows[2:] / gam


def _member_group(members, s_vals, xi_lo, xi_hi, density):
    """Labels taken from solved members, trapezoid-weighted in Z."""
    Z = np.array([m.Z for m in members])
    wZ = np.zeros(len(Z))
    dZ = np.diff(Z)
    wZ[:-1] += dZ / 2
    wZ[1:] += dZ / 2
    weights = wZ * density.n(Z)
    D_tab = np.zeros((len(Z), len(s_vals)))
    B_tab = np.zeros((len(Z), 2, len(s_vals)))
    for i, m in enumerate(members):
        T = s_vals - m.Z
        ok = T >= xi_lo
        rows = m.dense(_invert_light_cone(m.dense, np.where(ok, T, xi_lo), xi_lo, xi_hi))
        D_tab[i] = np.where(ok, rows[0], 0.0)
        B_tab[i] = np.where(ok, _beta_rows(rows), 0.0)

    def column(k):
        return Z + D_tab[:, k], B_tab[:, :, k].T * weights
    return column


def _bulk_group(member, z0, s_vals, step, xi_lo, xi_hi, n0):
    """Labels z0, z0 + step, ... sharing one solution (step density).

    Label z0 + j step reaches light-front time xi at lab time s_k with
    xi + Delta(xi) = s_k - z0 - j step, so a single inversion at s_k - z0
    serves every label through the index difference k - j.
    """
    T = s_vals - z0
    ok = T >= xi_lo
    rows = member.dense(_invert_light_cone(member.dense, np.where(ok, T, xi_lo), xi_lo, xi_hi))
    delta = np.where(ok, rows[0], 0.0)
    beta = np.where(ok, _beta_rows(rows), 0.0)
    n_lab = int(np.floor((s_vals[-1] - z0) / step)) + 1
    labels = z0 + np.arange(max(n_lab, 1)) * step
    weights = np.full(len(labels), step * n0)
    weights[0] *= 0.5

    def column(k):
        j = np.arange(min(k, len(labels) - 1) + 1)
        idx = k - j
        return labels[j] + delta[idx], beta[:, idx] * weights[j]
    return column


def aperp_residual(family: PlasmaFamily, ct_max: float, step: float = 0.05,
                   threshold: float = RESIDUAL_THRESHOLD, report_stride: int = 20) -> Residual:
    """Retarded A_perp generated by the electron current, relative to max|alpha|.

    In normalized units the 1-D retarded solution is

        R(ct, z) = 2 pi r_e * int ds int dZ n(Z) beta_perp(s, Z) theta(ct - s - |z - z_e(s, Z)|),

    integrated in Lagrangian labels so no Eulerian density is needed.  For
    each lab time s the Z-integral is a cumulative sum F_s over elements
    sorted by z_e, and R = 2 pi r_e int ds [F_s(z + ct - s) - F_s(z - ct + s)],
    accumulated along the two characteristic directions of a uniform grid.
    For a step density without static B the bulk labels are spaced by
    ``step`` up to ct_max and share one solution, while labels up to the
    deepest expelled member use the family's own solutions.  Otherwise the
    family's labels are used as they are.  The maximum is taken over the
    z-range occupied by electrons.
    """
    pump = family.pump
    m0 = family.members[0]
    xi_lo = float(m0.xi[0])
    xi_hi = float(min(m.xi[-1] for m in family.members))
    if isinstance(pump, ZeroPump):
        zeros = np.zeros((1, 1))
        return Residual(0.0, np.array([0.0]), np.array([0.0]), zeros, 0.0, step, ct_max, threshold)
    if xi_hi < ct_max - 1e-9:
        raise ValueError(f"ct_max = {ct_max:g} is beyond the solved span (xi <= {xi_hi:g})")
    xi_probe = np.linspace(xi_lo, xi_hi, 20001)
    max_alpha = float(np.max(np.sqrt(np.sum((pump.alpha(xi_probe)
                                          - pump.alpha(xi_lo)[:, None]) ** 2, axis=0))))
    n_t = int(np.round(ct_max / step))
    s_vals = np.arange(n_t + 1) * step

    groups = []
    members = sorted(family.members, key=lambda m: m.Z)
    if family.universal:
        # expelled surface elements use their own solutions, the bulk shares one
        bad = [m.Z for m in members if not m.valid]
        z_cut = max(bad) if bad else 0.0
        head = [m for m in members if m.Z <= z_cut] if bad else []
        bulk = next((m for m in members if m.valid and m.Z > z_cut), None)
        if bulk is None:
            head, bulk = members, None
        if len(head) > 1:
            groups.append(_member_group(head, s_vals, xi_lo, xi_hi, family.density))
        if bulk is not None:
            groups.append(_bulk_group(bulk, z_cut, s_vals, step, xi_lo, xi_hi,
                                      family.density.n0))
    else:
        groups.append(_member_group(members, s_vals, xi_lo, xi_hi, family.density))

    def column(m):
        parts = [g(m) for g in groups]
        return (np.concatenate([p[0] for p in parts]),
                np.concatenate([p[1] for p in parts], axis=1))

    # z-grid covering every element position up to ct_max
    ze_min, ze_max = np.inf, -np.inf
    for m in range(0, n_t + 1, max(1, n_t // 200)):
        ze, _ = column(m)
        ze_min, ze_max = min(ze_min, ze.min()), max(ze_max, ze.max())
    ze_last, _ = column(n_t)
    ze_min, ze_max = min(ze_min, ze_last.min()), max(ze_max, ze_last.max())
    z_lo = np.floor(ze_min / step) * step - 2 * step
    z_hi = np.ceil(ze_max / step) * step + 2 * step
    zg = np.arange(z_lo, z_hi + 0.5 * step, step)

    A = np.zeros((2, len(zg)))      # sums along z + (ct - s) = const
    B = np.zeros((2, len(zg)))      # sums along z - (ct - s) = const
    total_sum = np.zeros(2)
    best = 0.0
    stride = max(1, report_stride)
    rep_ct, rep_R = [], []
    occupied = np.zeros(len(zg), bool)
    pref = 2 * np.pi * R_E_UM * step
    for m in range(n_t + 1):
        ze, q = column(m)
        order = np.argsort(ze, kind="stable")
        ze_s = ze[order]
        cum = np.cumsum(q[:, order], axis=1)
        G = np.vstack([np.interp(zg, ze_s, cum[c], left=0.0, right=cum[c, -1]) for c in range(2)])
        shifted = np.empty_like(A)
        shifted[:, :-1] = A[:, 1:]
        shifted[:, -1] = total_sum
        A = G + shifted
        shifted[:, 1:] = B[:, :-1]
        shifted[:, 0] = 0.0
        B = G + shifted
        total_sum = total_sum + cum[:, -1]
        occupied |= (zg >= ze_s[0] - step) & (zg <= ze_s[-1] + step)
        R = pref * (A - B)
        mag = np.sqrt(np.sum(R**2, axis=0))
        best = max(best, float(np.max(mag[occupied])))
        if m % stride == 0 or m == n_t:
            rep_ct.append(s_vals[m])
            rep_R.append(mag[::stride])
    grid_ratio = np.array(rep_R) / max_alpha
    return Residual(best / max_alpha, np.array(rep_ct), zg[::stride], grid_ratio, max_alpha,
                    step, ct_max, threshold)


def carrier_phase_sensitivity(pump_factory: Callable[[float], Pump], M: float, xi_span,
                              shift=np.pi / 2, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Relative changes of max s and max |u_perp| when the carrier phase shifts.

    ``max |u_perp|`` compares the sup over xi of the two runs.
    """
    base = solve_step_cauchy(pump_factory(0.0), M, xi_span, rtol, atol)
    moved = solve_step_cauchy(pump_factory(shift), M, xi_span, rtol, atol)
    ds = abs(moved.s.max() - base.s.max()) / base.s.max()
    u0 = np.sqrt(base.v).max()
    u1 = np.sqrt(moved.v).max()
    return float(ds), float(abs(u1 - u0) / u0)
