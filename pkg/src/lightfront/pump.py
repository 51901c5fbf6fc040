"""Travelling-wave pumps eps_perp(xi) and their potentials alpha_perp(xi).

A pump is stored normalized (q eps / mc^2, units 1/um).  ``alpha`` is minus
the antiderivative of the pump taken from -infinity, so for a particle that
starts at rest before the pulse with no static transverse forces,
u_perp(xi) = -alpha(xi).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .quadrature import CachedAntiderivative

# Gaussian tails are cut where exp(-x^2/2 sigma) < exp(-_GAUSS_CUT).
_GAUSS_CUT = 45.0


class DivergentTail(ValueError):
    """The pump is not integrable over (-inf, xi], so alpha is undefined."""


class OutOfDomain(ValueError):
    """A sampled profile was evaluated outside its grid."""


# --------------------------------------------------------------------------
# envelopes


@dataclass(frozen=True)
class GaussianEnvelope:
    """a * exp(-(xi - center)^2 / (2 sigma)), sigma in um^2."""

    amplitude: float
    sigma: float
    center: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.amplitude < 0:
            raise ValueError("envelope amplitude must be non-negative")

    def __call__(self, xi):
        return self.amplitude * np.exp(-((np.asarray(xi) - self.center) ** 2) / (2 * self.sigma))

    def derivative(self, xi):
        return -(np.asarray(xi) - self.center) / self.sigma * self(xi)

    def bounds(self):
        half = np.sqrt(2 * self.sigma * _GAUSS_CUT)
        return self.center - half, self.center + half

    @property
    def scale(self):
        return np.sqrt(self.sigma)

    @property
    def peak(self):
        return self.amplitude

    def threshold_interval(self, threshold):
        if threshold <= 0:
            return self.bounds()
        if threshold >= self.amplitude:
            return None
        half = np.sqrt(2 * self.sigma * np.log(self.amplitude / threshold))
        return self.center - half, self.center + half


@dataclass(frozen=True)
class BumpEnvelope:
    """Smooth compactly supported envelope a * exp(1 - 1/(1 - r^2)), r = (xi - c)/w."""

    amplitude: float
    half_width: float
    center: float = 0.0

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.amplitude < 0:
            raise ValueError("envelope amplitude must be non-negative")

    def _r2(self, xi):
        return ((np.asarray(xi, float) - self.center) / self.half_width) ** 2

    def __call__(self, xi):
        r2 = self._r2(xi)
        inside = r2 < 1.0
        out = np.zeros_like(r2)
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out if np.ndim(xi) else float(out)

    def derivative(self, xi):
        xi = np.asarray(xi, float)
        r2 = self._r2(xi)
        inside = r2 < 1.0
        out = np.zeros_like(r2)
        r = (xi - self.center)[inside] / self.half_width
        g = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        out[inside] = -2 * r / (1 - r2[inside]) ** 2 * g / self.half_width
        return out

    def bounds(self):
        return self.center - self.half_width, self.center + self.half_width

    @property
    def scale(self):
        return self.half_width / 8

    @property
    def peak(self):
        return self.amplitude

    def threshold_interval(self, threshold):
        if threshold <= 0:
            return self.bounds()
        if threshold >= self.amplitude:
            return None
        # exp(1 - 1/(1-r^2)) = t  ->  r^2 = 1 - 1/(1 - ln t)
        r = np.sqrt(1.0 - 1.0 / (1.0 - np.log(threshold / self.amplitude)))
        return self.center - r * self.half_width, self.center + r * self.half_width


@dataclass(frozen=True)
class ConstantEnvelope:
    """Unmodulated carrier; only integrable once a compact support is declared."""

    amplitude: float

    def __call__(self, xi):
        return self.amplitude * np.ones_like(np.asarray(xi, float))

    def derivative(self, xi):
        return np.zeros_like(np.asarray(xi, float))

    def bounds(self):
        return -np.inf, np.inf

    @property
    def scale(self):
        return np.inf

    @property
    def peak(self):
        return self.amplitude

    def threshold_interval(self, threshold):
        return None if threshold >= self.amplitude else (-np.inf, np.inf)


@dataclass(frozen=True, eq=False)
class SampledEnvelope:
    """Envelope given on a grid, monotone-cubic interpolated, zero outside."""

    xi: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, float)
        values = np.asarray(self.values, float)
        if xi.ndim != 1 or xi.shape != values.shape or len(xi) < 2:
            raise ValueError("sampled envelope needs matching 1-D xi and values")
        if np.any(np.diff(xi) <= 0):
            raise ValueError("sampled envelope grid must be strictly increasing")
        if np.any(values < 0):
            raise ValueError("envelope samples must be non-negative")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_interp", PchipInterpolator(xi, values, extrapolate=False))

    def __call__(self, xi):
        out = np.nan_to_num(self._interp(np.asarray(xi, float)), nan=0.0)
        return out if np.ndim(xi) else float(out)

    def derivative(self, xi):
        return np.nan_to_num(self._interp.derivative()(np.asarray(xi, float)), nan=0.0)

    def bounds(self):
        return self.xi[0], self.xi[-1]

    @property
    def scale(self):
        return float(np.min(np.diff(self.xi)))

    @property
    def peak(self):
        return float(self.values.max())

    def threshold_interval(self, threshold):
        above = self.xi[self.values > threshold]
        if len(above) == 0:
            return None
        return above[0], above[-1]

    @property
    def breakpoints(self):
        return (self.xi[0], self.xi[-1])


# --------------------------------------------------------------------------
# pumps


class Pump:
    """Common interface: ``eval`` returns shape (2, ...), ``alpha`` likewise."""

    breakpoints: tuple = ()

    def eval(self, xi):
        raise NotImplementedError

    def alpha(self, xi):
        raise NotImplementedError

    def __call__(self, xi):
        return self.eval(xi)

    @property
    def max_step(self) -> float:
        """Largest xi step an integrator may take without skipping structure."""
        return np.inf

    @property
    def extent(self) -> tuple[float, float]:
        """Interval outside which the pump vanishes (to rounding)."""
        return (np.inf, -np.inf)

    def envelope_value(self, xi):
        """Instantaneous amplitude |eps_perp| envelope used for thresholds."""
        return np.zeros_like(np.asarray(xi, float))


class ZeroPump(Pump):
    def eval(self, xi):
        return np.zeros((2,) + np.shape(xi))

    def alpha(self, xi):
        return np.zeros((2,) + np.shape(xi))

    def __repr__(self):
        return "ZeroPump()"


def _intersect(a, b):
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if lo <= hi else (0.0, 0.0)


class ModulatedCarrier(Pump):
    """envelope(xi) * (a1 cos(k xi + phi), a2 sin(k xi)), optionally cut to ``support``.

    ``a1`` and ``a2`` are dimensionless polarization weights; the sign of the
    charge is carried here so the envelope stays non-negative.  Linear
    polarization is a2 = 0, circular is |a1| = |a2|.
    """

    def __init__(self, envelope, k, a1=1.0, a2=0.0, phi=0.0, support=None):
        if k <= 0:
            raise ValueError("carrier wavenumber must be positive")
        self.envelope = envelope
        self.k = float(k)
        self.a1 = float(a1)
        self.a2 = float(a2)
        self.phi = float(phi)
        self.support = None if support is None else (float(support[0]), float(support[1]))
        if self.support is not None and self.support[1] < self.support[0]:
            raise ValueError("support must be an ordered interval")
        bps = list(getattr(envelope, "breakpoints", ()))
        if self.support is not None:
            bps += list(self.support)
        self.breakpoints = tuple(sorted(set(bps)))
        env_lo, env_hi = envelope.bounds()
        if self.support is not None:
            env_lo, env_hi = _intersect((env_lo, env_hi), self.support)
        self._extent = (env_lo, env_hi)
        self._cache = None
        if np.isfinite(env_lo) and np.isfinite(env_hi):
            h = min(2 * np.pi / self.k / 8, envelope.scale / 4)
            self._cache = CachedAntiderivative(self.eval, env_lo, env_hi, h, self.breakpoints)

    @classmethod
    def from_a0(cls, a0, wavelength_um, envelope="gaussian", sigma_um2=None, center_um=0.0,
                half_width_um=None, polarization="linear", phase=0.0, support=None,
                charge_sign=-1):
        """Build a pump from the dimensionless strength a0 = e a lambda / mc^2."""
        amp = a0 / wavelength_um
        if envelope == "gaussian":
            env = GaussianEnvelope(amp, sigma_um2, center_um)
        elif envelope == "bump":
            env = BumpEnvelope(amp, half_width_um, center_um)
        elif envelope == "constant":
            env = ConstantEnvelope(amp)
        else:
            raise ValueError(f"unknown envelope {envelope!r}")
        a2 = {"linear": 0.0, "circular": 1.0}[polarization]
        return cls(env, 2 * np.pi / wavelength_um, a1=charge_sign, a2=charge_sign * a2,
                   phi=phase, support=support)

    @property
    def wavelength(self):
        return 2 * np.pi / self.k

    def _window(self, xi):
        if self.support is None:
            return 1.0
        return ((xi >= self.support[0]) & (xi <= self.support[1])).astype(float)

    def envelope_value(self, xi):
        xi = np.asarray(xi, float)
        return self.envelope(xi) * self._window(xi)

    def carrier(self, xi):
        xi = np.asarray(xi, float)
        return np.stack([self.a1 * np.cos(self.k * xi + self.phi), self.a2 * np.sin(self.k * xi)])

    def carrier_derivative(self, xi):
        xi = np.asarray(xi, float)
        return self.k * np.stack([-self.a1 * np.sin(self.k * xi + self.phi),
                                  self.a2 * np.cos(self.k * xi)])

    def eval(self, xi):
        xi = np.asarray(xi, float)
        return self.envelope_value(xi) * self.carrier(xi)

    def alpha(self, xi):
        if self._cache is None:
            raise DivergentTail("pump is not integrable: declare a compact support")
        return -self._cache(xi)

    def alpha_slow(self, xi):
        """Leading slow-modulation estimate alpha ~ eps(xi) * carrier'(xi) / k^2."""
        xi = np.asarray(xi, float)
        return self.envelope_value(xi) * self.carrier_derivative(xi) / self.k**2

    @property
    def max_step(self):
        return self.wavelength / 8

    @property
    def extent(self):
        return self._extent

    def __repr__(self):
        return (f"ModulatedCarrier({self.envelope!r}, k={self.k}, a1={self.a1}, a2={self.a2}, "
                f"phi={self.phi}, support={self.support})")


class Superposition(Pump):
    def __init__(self, pumps: Sequence[Pump]):
        self.pumps = tuple(pumps)
        self.breakpoints = tuple(sorted({b for p in self.pumps for b in p.breakpoints}))

    def eval(self, xi):
        return sum(p.eval(xi) for p in self.pumps)

    def alpha(self, xi):
        return sum(p.alpha(xi) for p in self.pumps)

    def envelope_value(self, xi):
        return sum(p.envelope_value(xi) for p in self.pumps)

    @property
    def max_step(self):
        return min(p.max_step for p in self.pumps)

    @property
    def extent(self):
        los, his = zip(*(p.extent for p in self.pumps))
        return min(los), max(his)


class SampledPump(Pump):
    """Pump given as 2-component samples on a grid.

    Samples are interpolated component-wise with monotone cubics and the
    potential uses the exact antiderivative of that interpolant.  Outside the
    grid the pump is zero only if ``support`` is declared; otherwise evaluating
    there is an error.
    """

    def __init__(self, xi, values, support=None, wavelength=None):
        xi = np.asarray(xi, float)
        values = np.asarray(values, float)
        if values.shape != (2, len(xi)):
            raise ValueError("values must have shape (2, len(xi))")
        self.xi = xi
        self.values = values
        self.support = None if support is None else (float(support[0]), float(support[1]))
        self._interp = PchipInterpolator(xi, values, axis=1, extrapolate=False)
        self._anti = self._interp.antiderivative()
        self.breakpoints = (xi[0], xi[-1])
        self._h = float(np.min(np.diff(xi))) if wavelength is None else wavelength / 8
        scale = np.abs(values).max() or 1.0
        self._tails_vanish = (np.all(np.abs(values[:, 0]) < 1e-12 * scale)
                              and np.all(np.abs(values[:, -1]) < 1e-12 * scale))

    def _outside(self, xi):
        return (xi < self.xi[0]) | (xi > self.xi[-1])

    def eval(self, xi):
        xi = np.asarray(xi, float)
        if self.support is None and np.any(self._outside(xi)):
            raise OutOfDomain("sampled pump evaluated outside its grid with no declared support")
        out = np.nan_to_num(self._interp(xi), nan=0.0)
        if self.support is not None:
            out = out * ((xi >= self.support[0]) & (xi <= self.support[1]))
        return out

    def alpha(self, xi):
        xi = np.asarray(xi, float)
        if self.support is None and not self._tails_vanish:
            raise DivergentTail("sampled pump does not vanish at its ends and has no support")
        if self.support is not None and (self.support[0] < self.xi[0] or self.support[1] > self.xi[-1]):
            raise DivergentTail("declared support extends beyond the sample grid")
        clipped = np.clip(xi, self.xi[0], self.xi[-1])
        if self.support is not None:
            clipped = np.clip(clipped, *self.support)
            base = self._anti(np.clip(self.support[0], self.xi[0], self.xi[-1]))
        else:
            base = self._anti(self.xi[0])
        return -(self._anti(clipped) - base.reshape((2,) + (1,) * np.ndim(xi)))

    def envelope_value(self, xi):
        return np.sqrt(np.sum(self.eval(xi) ** 2, axis=0))

    @property
    def max_step(self):
        return self._h

    @property
    def extent(self):
        if self.support is not None:
            return _intersect(self.support, (self.xi[0], self.xi[-1]))
        return self.xi[0], self.xi[-1]


def eval_pump(pump: Pump, xi):
    return pump.eval(xi)


def eval_alpha(pump: Pump, xi):
    return pump.alpha(xi)


def pulse_length(pump: Pump, threshold: float, resolution: float | None = None) -> float:
    """Measure of {xi : envelope(xi) > threshold}.

    Closed form for a single Gaussian or bump carrier; otherwise the envelope
    is sampled on a fine grid over the pump's extent.
    """
    if isinstance(pump, ZeroPump):
        return 0.0
    if isinstance(pump, ModulatedCarrier) and hasattr(pump.envelope, "threshold_interval"):
        interval = pump.envelope.threshold_interval(threshold)
        if interval is None:
            return 0.0
        if pump.support is not None:
            interval = _intersect(interval, pump.support)
        length = interval[1] - interval[0]
        if not np.isfinite(length):
            raise DivergentTail("envelope exceeds the threshold on an unbounded set")
        return float(length)
    lo, hi = pump.extent
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise DivergentTail("pump has unbounded extent")
    h = resolution or pump.max_step / 20
    grid = np.arange(lo, hi + h, h)
    return float(np.count_nonzero(pump.envelope_value(grid) > threshold) * h)


def threshold_for_length(pump: ModulatedCarrier, length: float) -> float:
    """Envelope level whose super-level set has the given length (Gaussian and bump)."""
    env = pump.envelope
    if isinstance(env, GaussianEnvelope):
        return env.amplitude * np.exp(-((length / 2) ** 2) / (2 * env.sigma))
    if isinstance(env, BumpEnvelope):
        r2 = (length / 2 / env.half_width) ** 2
        return env.amplitude * np.exp(1.0 - 1.0 / (1.0 - r2))
    raise TypeError("threshold back-solve needs a Gaussian or bump envelope")


def gaussian_pulse(a0: float, wavelength_um: float = 0.8, sigma_um2: float = 20.0) -> ModulatedCarrier:
    """Linearly polarized Gaussian pulse centred at xi = 0 (electron charge)."""
    return ModulatedCarrier.from_a0(a0, wavelength_um, "gaussian", sigma_um2=sigma_um2)


def plasma_impact_pulse(a0: float = 15.0, wavelength_um: float = 0.8, sigma_um2: float = 20.0,
                        length_um: float = 27.0, phase: float = 0.0) -> ModulatedCarrier:
    """The plasma-impact pulse: Gaussian centred on [0, l] and cut to that support.

    Outside [0, l] the amplitude is below the ionization threshold, so the
    plasma only sees the pump on this interval.
    """
    return ModulatedCarrier.from_a0(a0, wavelength_um, "gaussian", sigma_um2=sigma_um2,
                                    center_um=length_um / 2, phase=phase,
                                    support=(0.0, length_um))
