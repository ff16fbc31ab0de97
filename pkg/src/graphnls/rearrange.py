"""Decreasing rearrangement and Gagliardo-Nirenberg checks.

Everything here works with the piecewise-linear interpolant of the samples,
for which both the distribution function and the L^p norms have closed forms.
That keeps equimeasurability and the Polya-Szego inequality exact up to
rounding instead of up to quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .field import GraphField, Mesh


def p1_power_integral(a, b, h, p: float):
    """Exact integral of |f|^p for f linear on an interval of length h, f(0)=a, f(h)=b.

    Vectorized over arrays. Handles sign changes by splitting at the zero.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aa, bb = np.abs(a), np.abs(b)
    if p == 2:
        return h * (a * a + a * b + b * b) / 3.0
    if p == 4:
        a2, b2, ab = a * a, b * b, a * b
        return h * (a2 * a2 + ab * (a2 + b2) + ab * ab + b2 * b2) / 5.0
    q = p + 1.0
    cross = (a * b) < 0
    denom = np.where(cross, aa + bb, np.abs(bb - aa))
    num = np.where(cross, aa**q + bb**q, np.abs(bb**q - aa**q))
    near = denom <= 1e-7 * np.maximum(aa, bb)
    safe = np.where(near | (denom == 0), 1.0, denom)
    exact = h * num / (q * safe)
    flat = h * (0.5 * (aa + bb)) ** p
    return np.where(near | (denom == 0), np.where(cross, 0.0, flat), exact)


def _pieces(u: GraphField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Left values, right values and widths of all linear pieces of u."""
    lefts, rights, widths = [], [], []
    for e in u.graph.edges:
        x, s = u.edge_values(e.id)
        lefts.append(s[:-1])
        rights.append(s[1:])
        widths.append(np.diff(x))
    return np.concatenate(lefts), np.concatenate(rights), np.concatenate(widths)


def p1_norm_p(u: GraphField, p: float) -> float:
    """``||u||_p^p`` of the interpolant; exact tails are integrated in closed form."""
    m = u.mesh
    s = u.samples
    if math.isinf(p):
        vals = [np.max(np.abs(s), initial=0.0)]
        if m.tails:
            vals.append(np.max(np.abs(u.tail_values)))
        return float(max(vals))
    h = 1.0 / m.inv_h
    total = float(np.sum(p1_power_integral(s[m.left], s[m.right], h, p)))
    if m.tails:
        total += float(np.sum(np.abs(u.tail_values) ** p)) / (p * u.tail_rate)
    return total


def p1_norms_batch(mesh: Mesh, samples: np.ndarray, p: float) -> np.ndarray:
    """Row-wise ``||u||_p^p`` for a batch of truncated-mode sample vectors."""
    if math.isinf(p):
        return np.max(np.abs(samples), axis=-1)
    h = 1.0 / mesh.inv_h
    return p1_power_integral(samples[..., mesh.left], samples[..., mesh.right], h, p).sum(axis=-1)


@dataclass(frozen=True)
class Rearrangement:
    """Nonincreasing piecewise-linear function on [0, measure]."""

    x: np.ndarray
    values: np.ndarray
    kinetic: float

    @property
    def measure(self) -> float:
        return float(self.x[-1])

    def lp_norm_p(self, p: float) -> float:
        if math.isinf(p):
            return float(self.values[0]) if len(self.values) else 0.0
        dx = np.diff(self.x)
        return float(np.sum(p1_power_integral(self.values[:-1], self.values[1:], dx, p)))

    def __call__(self, t):
        return np.interp(t, self.x, self.values)


def _suffix_sums(keys: np.ndarray, vals: np.ndarray):
    order = np.argsort(keys, kind="stable")
    k = keys[order]
    c = np.concatenate([np.cumsum(vals[order][::-1])[::-1], [0.0]])

    def above(t, strict=True):
        idx = np.searchsorted(k, t, side="right" if strict else "left")
        return c[idx]

    return above


def decreasing_rearrangement(u: GraphField) -> Rearrangement:
    """Layer-cake rearrangement of |u| onto a half-line.

    The distribution function of a piecewise-linear |u| is piecewise linear
    in the level, so u* is piecewise linear with breakpoints at the nodal
    values of |u|. Plateaus of u (constant pieces) become plateaus of u*.
    """
    a, b, w = _pieces(u)
    cross = (a * b) < 0
    if np.any(cross):
        ac, bc, wc = np.abs(a[cross]), np.abs(b[cross]), w[cross]
        w1 = wc * ac / (ac + bc)
        a = np.concatenate([np.abs(a[~cross]), ac, np.zeros_like(bc)])
        b = np.concatenate([np.abs(b[~cross]), np.zeros_like(ac), bc])
        w = np.concatenate([w[~cross], w1, wc - w1])
    else:
        a, b = np.abs(a), np.abs(b)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    flat = hi == lo
    slope = np.where(flat, 0.0, w / np.where(flat, 1.0, hi - lo))
    # rho(t) = sum_{lo>t} w + sum_{lo<=t<hi} slope*(hi - t), assembled from suffix sums
    s_flat = _suffix_sums(lo[flat], w[flat])
    s_lo_w = _suffix_sums(lo[~flat], w[~flat])
    s_hi_ch = _suffix_sums(hi[~flat], (slope * hi)[~flat])
    s_lo_ch = _suffix_sums(lo[~flat], (slope * hi)[~flat])
    s_hi_c = _suffix_sums(hi[~flat], slope[~flat])
    s_lo_c = _suffix_sums(lo[~flat], slope[~flat])

    def rho(t, strict=True):
        return (s_flat(t, strict) + s_lo_w(t, strict)
                + s_hi_ch(t, strict) - s_lo_ch(t, strict)
                - t * (s_hi_c(t, strict) - s_lo_c(t, strict)))

    def band_slope(t):
        return s_hi_c(t) - s_lo_c(t)

    levels = np.unique(np.concatenate([lo, hi]))[::-1]
    x_open = np.maximum(rho(levels, strict=True), 0.0)
    x_closed = np.maximum(rho(levels, strict=False), 0.0)
    xs = np.empty(2 * len(levels))
    vs = np.empty(2 * len(levels))
    xs[0::2], xs[1::2] = x_open, x_closed
    vs[0::2], vs[1::2] = levels, levels
    xs = np.maximum.accumulate(xs)
    keep = np.concatenate([[True], (np.diff(xs) > 0) | (np.diff(vs) != 0)])
    xs, vs = xs[keep], vs[keep]
    xs[0] = 0.0
    # kinetic energy band by band: dt^2/dx with dx = dt * total slope of the band
    mids = 0.5 * (levels[:-1] + levels[1:])
    dt = levels[:-1] - levels[1:]
    c = band_slope(mids)
    kin = float(np.sum(np.where(c > 0, dt / np.where(c > 0, c, 1.0), 0.0)))
    return Rearrangement(xs, vs, kin)


# -- GN inequalities ---------------------------------------------------------


@dataclass(frozen=True)
class GNCheck:
    lhs: float
    rhs: float
    satisfied: bool

    @property
    def margin(self) -> float:
        """Relative slack ``1 - lhs/rhs``; negative means violated."""
        return 1.0 - self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else -math.inf)


def _constant(p: float, constants) -> float:
    if constants is None:
        from .thresholds import gn_constant

        return gn_constant(p)
    if callable(constants):
        return float(constants(p))
    if hasattr(constants, "C_p"):
        return float(constants.C_p)
    return float(constants)


def gn_rhs(mass, kinetic, p: float, C: float):
    if math.isinf(p):
        return C * mass ** 0.25 * kinetic ** 0.25
    return C * mass ** ((p + 2) / 4) * kinetic ** ((p - 2) / 4)


def gn_check(u: GraphField, p: float, constants: float | Callable | None = None,
             rtol: float = 1e-6) -> GNCheck:
    """Evaluate both sides of the half-line GN inequality for ``u``.

    ``lhs`` is ``||u||_p^p`` (``||u||_inf`` for p = inf); norms are those of
    the piecewise-linear interpolant, which is an honest H^1 function, so the
    inequality must hold without discretization slack.
    """
    from .field import kinetic as _kin

    C = _constant(p, constants)
    lhs = p1_norm_p(u, p)
    rhs = float(gn_rhs(p1_norm_p(u, 2), _kin(u), p, C))
    return GNCheck(lhs, rhs, lhs <= rhs * (1 + rtol))


def gn_margins_batch(mesh: Mesh, dofs: np.ndarray, p: float, C: float | None = None) -> np.ndarray:
    """Relative margins ``1 - lhs/rhs`` for a batch of truncated-mode fields."""
    if C is None:
        C = _constant(p, None)
    out = []
    for chunk in np.array_split(np.atleast_2d(dofs), max(1, len(dofs) // 500)):
        s = mesh.samples(chunk)
        lhs = p1_norms_batch(mesh, s, p)
        rhs = gn_rhs(p1_norms_batch(mesh, s, 2), mesh.sample_kinetic(s), p, C)
        out.append(1.0 - lhs / rhs)
    return np.concatenate(out)
