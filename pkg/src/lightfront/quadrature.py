"""Breakpoint-aware panel quadrature with a cached antiderivative.

Integrands here oscillate on the carrier wavelength and are queried densely by
the ODE right-hand sides, so the antiderivative is accumulated once on a panel
grid and evaluated between nodes from the panel's integrated Legendre
interpolant.  Both the panel sums and the partial evaluations are exact to
rounding for integrands that are smooth on the panel scale.
"""
from __future__ import annotations

import numpy as np

_ORDER = 20
# points per vectorized evaluation block, bounds temporary memory
_CHUNK = 65536
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_ORDER)


def gauss_legendre(f, a, b):
    """Integrate ``f`` over each interval [a_i, b_i] with a 20-point rule.

    ``f`` receives an array of abscissae with shape ``a.shape + (20,)`` and may
    return extra leading component axes; the result has shape
    ``components + a.shape``.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[..., None] + half[..., None] * _GL_X
    vals = np.asarray(f(pts))
    return np.sum(vals * _GL_W, axis=-1) * half


def panel_nodes(lo, hi, h_max, breakpoints=()):
    """Nodes on [lo, hi] containing every breakpoint, spaced at most ``h_max``."""
    edges = np.unique(np.concatenate([[lo, hi], [b for b in breakpoints if lo < b < hi]]))
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(np.ceil((b - a) / h_max)))
        pieces.append(np.linspace(a, b, n + 1)[:-1])
    pieces.append([edges[-1]])
    return np.concatenate(pieces)


def _refine(f, nodes, rtol, atol, max_rounds=20, max_nodes=500_000, max_depth=6):
    """Bisect panels whose 20-point estimate disagrees with the split estimate.

    A smooth panel converges after one or two bisections; panels still failing
    after ``max_depth`` halvings are limited by rounding in ``f`` and are kept.
    """
    h_min = np.min(np.diff(nodes)) / 2**max_depth
    for _ in range(max_rounds):
        if len(nodes) > max_nodes:
            break
        whole = gauss_legendre(f, nodes[:-1], nodes[1:])
        mid = 0.5 * (nodes[:-1] + nodes[1:])
        split = gauss_legendre(f, nodes[:-1], mid) + gauss_legendre(f, mid, nodes[1:])
        err = np.abs(whole - split)
        # relative to the integral of |f| so cancelling panels do not refine forever
        scale = gauss_legendre(lambda p: np.abs(f(p)), nodes[:-1], nodes[1:])
        if err.ndim > 1:
            err = err.reshape(-1, err.shape[-1]).max(axis=0)
            scale = scale.reshape(-1, scale.shape[-1]).max(axis=0)
        # floor at a small fraction of the mean panel so negligible tails do not refine
        bad = err > atol + rtol * (scale + 1e-3 * scale.mean())
        bad &= np.diff(nodes) > 1.5 * h_min
        if not np.any(bad):
            return nodes, split
        nodes = np.sort(np.concatenate([nodes, mid[bad]]))
    raise RuntimeError("panel quadrature did not converge")


def _legendre_antiderivative_coeffs(vals, half):
    """Coefficients of the antiderivative (from -1) of each panel's interpolant.

    ``vals`` holds f at the 20 Gauss nodes of every panel (last axis); the
    degree-19 Legendre interpolant is integrated exactly and scaled to xi.
    """
    j = np.arange(_ORDER)
    P = np.polynomial.legendre.legvander(_GL_X, _ORDER - 1)  # (node, degree)
    coef = np.einsum("...i,i,ij->...j", vals, _GL_W, P) * (2 * j + 1) / 2
    anti = np.polynomial.legendre.legint(coef, lbnd=-1, axis=-1)
    return anti * half[:, None]


def _legendre_eval(coef, t):
    """Evaluate per-point Legendre series; ``coef`` has degree on the last axis."""
    p_prev = np.ones_like(t)
    p_cur = t
    out = coef[..., 0] * p_prev + coef[..., 1] * p_cur
    for k in range(1, coef.shape[-1] - 1):
        p_prev, p_cur = p_cur, ((2 * k + 1) * t * p_cur - k * p_prev) / (k + 1)
        out = out + coef[..., k + 1] * p_cur
    return out


class CachedAntiderivative:
    """F(x) = integral of f from ``lo`` to x, clamped outside [lo, hi].

    Below ``lo`` the value is 0 and above ``hi`` it is the total, which is the
    correct antiderivative whenever f vanishes outside [lo, hi].  Between
    nodes F is the exact antiderivative of the panel's 20-point Legendre
    interpolant, so evaluation needs no further calls to f.
    """

    def __init__(self, f, lo, hi, h_max, breakpoints=(), rtol=1e-13, atol=1e-300):
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
            raise ValueError(f"bad quadrature range [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)
        if hi == lo:
            probe = np.asarray(f(np.array([lo])))
            self.nodes = np.array([lo])
            self.cum = np.zeros(probe.shape[:-1] + (1,), dtype=probe.dtype)
            self.coef = None
            return
        nodes = panel_nodes(lo, hi, h_max, breakpoints)
        nodes, _ = _refine(f, nodes, rtol, atol)
        a, b = nodes[:-1], nodes[1:]
        half = 0.5 * (b - a)
        vals = np.asarray(f(0.5 * (a + b)[:, None] + half[:, None] * _GL_X))
        coef = _legendre_antiderivative_coeffs(vals, half)
        self.nodes = nodes
        self.coef = coef
        panels = _legendre_eval(coef, np.ones(len(a)))
        zero = np.zeros(panels.shape[:-1] + (1,), dtype=panels.dtype)
        self.cum = np.concatenate([zero, np.cumsum(panels, axis=-1)], axis=-1)

    @property
    def total(self):
        return self.cum[..., -1]

    def __call__(self, x):
        if np.ndim(x) == 0 and self.coef is not None:
            return self._scalar(float(x))
        x = np.asarray(x, float)
        flat = np.clip(np.ravel(x), self.lo, self.hi)
        if self.coef is None:
            base = self.cum[..., np.zeros(len(flat), int)]
            return base.reshape(base.shape[:-1] + x.shape)
        out = np.empty(self.cum.shape[:-1] + flat.shape, dtype=self.cum.dtype)
        for i in range(0, len(flat), _CHUNK):
            out[..., i:i + _CHUNK] = self._eval(flat[i:i + _CHUNK])
        return out.reshape(out.shape[:-1] + x.shape)

    def _scalar(self, x):
        # ODE right-hand sides query one point at a time; avoid array overhead
        x = min(max(x, self.lo), self.hi)
        nodes = self.nodes
        i = min(max(int(np.searchsorted(nodes, x, side="right")) - 1, 0), len(nodes) - 2)
        a, b = nodes[i], nodes[i + 1]
        t = (2.0 * x - a - b) / (b - a)
        p = [1.0, t]
        for k in range(1, _ORDER):
            p.append(((2 * k + 1) * t * p[k] - k * p[k - 1]) / (k + 1))
        return self.cum[..., i] + self.coef[..., i, :] @ np.array(p)

    def _eval(self, flat):
        idx = np.clip(np.searchsorted(self.nodes, flat, side="right") - 1, 0, len(self.nodes) - 2)
        a = self.nodes[idx]
        b = self.nodes[idx + 1]
        t = (2 * flat - a - b) / (b - a)
        return self.cum[..., idx] + _legendre_eval(self.coef[..., idx, :], t)


def integrate(f, a, b, h_max, breakpoints=(), rtol=1e-13, atol=1e-300):
    """Definite integral of ``f`` over [a, b] using refined panels."""
    if b == a:
        return 0.0 * np.asarray(f(np.array([a])))[..., 0]
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    nodes = panel_nodes(a, b, h_max, breakpoints)
    _, panels = _refine(f, nodes, rtol, atol)
    return sign * np.sum(panels, axis=-1)
