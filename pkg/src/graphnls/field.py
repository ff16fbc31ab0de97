"""Discretized real H^1 functions on a metric graph.

Each bounded edge carries a uniform grid with both endpoints; vertex samples
are shared between the incident edges, so continuity holds by construction.
Half-lines are either truncated at ``R`` with a Dirichlet zero, or replaced by
the exact exponential tail ``u(v) exp(-rate x)`` (``rate = sqrt(lambda)``).

Quadrature is the composite trapezoid rule.  The kinetic term is the exact
Dirichlet integral of the piecewise-linear interpolant, which makes the
discrete Euler-Lagrange equations the standard three-point scheme used by the
solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from .errors import FieldInconsistent, InputError, ZeroMass
from .graph import Edge, MetricGraph

LOCALIZED = "localized"
EVERYWHERE = "everywhere"
TRUNCATED = "truncated"
EXACT_TAIL = "exact-tail"


def default_truncation(lam_est: float | None = None) -> float:
    lam = 0.05 if lam_est is None else max(lam_est, 0.05)
    return 40.0 / math.sqrt(lam)


@dataclass(frozen=True)
class GridSpec:
    h: float
    counts: Mapping[str, int] = field(default_factory=dict)
    R: float | None = None
    n_R: int | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise InputError("grid step must be positive")
        for eid, n in self.counts.items():
            if n < 2:
                raise InputError(f"edge {eid}: need at least 2 intervals, got {n}")
        if self.R is not None and (self.R <= 0 or not self.n_R or self.n_R < 2):
            raise InputError("half-line truncation needs R > 0 and n_R >= 2")

    @classmethod
    def build(cls, g: MetricGraph, h: float, R: float | None = None, h_R: float | None = None,
              counts: Mapping[str, int] | None = None) -> GridSpec:
        """Counts ``max(2, ceil(length/h))`` unless overridden per edge."""
        c = {e.id: max(2, math.ceil(float(e.length) / h - 1e-9)) for e in g.bounded_edges}
        if counts:
            c.update(counts)
        n_R = None
        if g.halflines:
            R = default_truncation() if R is None else float(R)
            n_R = max(2, math.ceil(R / (h_R or h) - 1e-9))
        else:
            R = None
        return cls(float(h), c, R, n_R)

    def step(self, e: Edge) -> float:
        if e.bounded:
            return float(e.length) / self.counts[e.id]
        return self.R / self.n_R

    def to_dict(self) -> dict:
        return {"h": self.h, "counts": dict(self.counts), "R": self.R, "n_R": self.n_R}

    @classmethod
    def from_dict(cls, d: dict) -> GridSpec:
        return cls(float(d["h"]), {str(k): int(v) for k, v in d.get("counts", {}).items()},
                   d.get("R"), d.get("n_R"))


class Mesh:
    """Degree-of-freedom layout plus the sparse operators built on it.

    Sample space: the concatenation of every edge's sample vector (vertex
    values repeated per edge-end).  DOF space: one entry per vertex plus the
    interior samples.  ``sample_dof`` maps samples to DOFs, ``-1`` marking the
    Dirichlet zero at the end of a truncated half-line.
    """

    def __init__(self, graph: MetricGraph, grid: GridSpec, halfline: str = TRUNCATED):
        if halfline not in (TRUNCATED, EXACT_TAIL):
            raise InputError(f"unknown half-line mode {halfline!r}")
        if graph.halflines and halfline == TRUNCATED and grid.R is None:
            raise InputError("truncated half-lines need GridSpec.R")
        self.graph = graph
        self.grid = grid
        self.halfline = halfline
        self.vertex_index = {v: i for i, v in enumerate(graph.vertices)}
        n = len(graph.vertices)
        self.slices: dict[str, slice] = {}
        self.edge_x: dict[str, np.ndarray] = {}
        self.edge_h: dict[str, float] = {}
        self.tails: list[tuple[str, int]] = []
        dof_chunks, w_chunks, core_chunks = [], [], []
        left, right, inv_h = [], [], []
        pos = 0
        for e in graph.edges:
            tail = self.vertex_index[e.tail]
            if e.halfline and halfline == EXACT_TAIL:
                self.tails.append((e.id, tail))
                continue
            if e.bounded:
                m = grid.counts[e.id]
                length = float(e.length)
                end = self.vertex_index[e.head]
            else:
                m = grid.n_R
                length = grid.R
                end = -1
            x = np.linspace(0.0, length, m + 1)
            h = length / m
            d = np.empty(m + 1, dtype=np.int64)
            d[0], d[-1] = tail, end
            d[1:-1] = np.arange(n, n + m - 1)
            n += m - 1
            w = np.full(m + 1, h)
            w[0] = w[-1] = h / 2
            self.slices[e.id] = slice(pos, pos + m + 1)
            self.edge_x[e.id] = x
            self.edge_h[e.id] = h
            dof_chunks.append(d)
            w_chunks.append(w)
            core_chunks.append(np.full(m + 1, e.bounded))
            idx = np.arange(pos, pos + m)
            left.append(idx)
            right.append(idx + 1)
            inv_h.append(np.full(m, 1.0 / h))
            pos += m + 1
        self.ndof = n
        self.nsamples = pos
        cat = (lambda xs, dt: np.concatenate(xs) if xs else np.zeros(0, dtype=dt))
        self.sample_dof = cat(dof_chunks, np.int64)
        self.w = cat(w_chunks, float)
        self.on_core = cat(core_chunks, bool)
        self.left = cat(left, np.int64)
        self.right = cat(right, np.int64)
        self.inv_h = cat(inv_h, float)
        self.valid = self.sample_dof >= 0
        self._safe_dof = np.where(self.valid, self.sample_dof, 0)
        self.tail_dofs = np.array([d for _, d in self.tails], dtype=np.int64)

    # -- maps between spaces ---------------------------------------------

    def samples(self, dofs: np.ndarray) -> np.ndarray:
        """DOF vector(s), last axis, to sample vector(s)."""
        s = np.take(dofs, self._safe_dof, axis=-1)
        return np.where(self.valid, s, 0.0)

    def kappa(self, nonlinearity: str) -> np.ndarray:
        if nonlinearity == EVERYWHERE:
            return np.ones(self.nsamples, dtype=bool)
        return self.on_core

    @cached_property
    def mass_diag(self) -> np.ndarray:
        return np.bincount(self.sample_dof[self.valid], self.w[self.valid], minlength=self.ndof)

    def weight_diag(self, nonlinearity: str) -> np.ndarray:
        k = self.kappa(nonlinearity) & self.valid
        return np.bincount(self.sample_dof[k], self.w[k], minlength=self.ndof)

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        a = self.sample_dof[self.left]
        b = self.sample_dof[self.right]
        c = self.inv_h
        rows, cols, vals = [], [], []
        ka, kb = a >= 0, b >= 0
        rows += [a[ka], b[kb]]
        cols += [a[ka], b[kb]]
        vals += [c[ka], c[kb]]
        both = ka & kb
        rows += [a[both], b[both]]
        cols += [b[both], a[both]]
        vals += [-c[both], -c[both]]
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.ndof, self.ndof),
        )

    # -- batch-friendly quadratures on sample vectors ----------------------

    def sample_mass(self, s: np.ndarray) -> np.ndarray:
        return (self.w * s * s).sum(axis=-1)

    def sample_kinetic(self, s: np.ndarray) -> np.ndarray:
        d = s[..., self.right] - s[..., self.left]
        return (d * d * self.inv_h).sum(axis=-1)

    def sample_lp(self, s: np.ndarray, p: float, mask: np.ndarray | None = None) -> np.ndarray:
        w = self.w if mask is None else self.w * mask
        return (w * np.abs(s) ** p).sum(axis=-1)

    def display_grid(self, tail_rate: float | None) -> np.ndarray:
        """Sample points used to print an exact tail."""
        R = self.grid.R if self.grid.R is not None else 40.0 / (tail_rate or 1.0)
        n = self.grid.n_R if self.grid.n_R is not None else max(2, math.ceil(R / self.grid.h))
        return np.linspace(0.0, R, n + 1)


class Support(str, Enum):
    ZERO = "zero"
    ON_K = "supported_on_K"
    ON_G = "supported_on_G"


@dataclass(frozen=True, eq=False)
class GraphField:
    """Real field on ``mesh``; immutable (``dofs`` is made read-only)."""

    mesh: Mesh
    dofs: np.ndarray
    nonlinearity: str = LOCALIZED
    tail_rate: float | None = None

    def __post_init__(self):
        d = np.array(self.dofs, dtype=float)
        if d.shape != (self.mesh.ndof,):
            raise InputError(f"expected {self.mesh.ndof} dofs, got shape {d.shape}")
        d.setflags(write=False)
        object.__setattr__(self, "dofs", d)
        if self.nonlinearity not in (LOCALIZED, EVERYWHERE):
            raise InputError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.mesh.tails:
            if self.nonlinearity == EVERYWHERE:
                raise InputError("exponential tails are only exact for the localized problem")
            if self.tail_rate is None or not self.tail_rate > 0:
                raise InputError("exact-tail fields need a positive decay rate")

    @property
    def graph(self) -> MetricGraph:
        return self.mesh.graph

    @property
    def grid(self) -> GridSpec:
        return self.mesh.grid

    @property
    def halfline_mode(self) -> str:
        return self.mesh.halfline

    @cached_property
    def samples(self) -> np.ndarray:
        return self.mesh.samples(self.dofs)

    @property
    def tail_values(self) -> np.ndarray:
        return self.dofs[self.mesh.tail_dofs]

    def vertex_value(self, v: str) -> float:
        return float(self.dofs[self.mesh.vertex_index[v]])

    def edge_values(self, edge_id: str) -> tuple[np.ndarray, np.ndarray]:
        """``(x, u)`` along one edge in its own coordinate."""
        m = self.mesh
        if edge_id in m.slices:
            return m.edge_x[edge_id], self.samples[m.slices[edge_id]]
        e = self.graph.edge(edge_id)
        x = m.display_grid(self.tail_rate)
        return x, self.vertex_value(e.tail) * np.exp(-self.tail_rate * x)

    def with_dofs(self, dofs, tail_rate: float | None = None) -> GraphField:
        rate = self.tail_rate if tail_rate is None else tail_rate
        return GraphField(self.mesh, dofs, self.nonlinearity, rate)

    def scaled(self, c: float) -> GraphField:
        return self.with_dofs(c * self.dofs)

    # -- constructors --------------------------------------------------

    @classmethod
    def from_function(cls, mesh: Mesh, f: Callable[[Edge, np.ndarray], np.ndarray],
                      nonlinearity: str = LOCALIZED, tail_rate: float | None = None,
                      atol: float = 1e-12) -> GraphField:
        values = {}
        for e in mesh.graph.edges:
            if e.id in mesh.slices:
                values[e.id] = np.asarray(f(e, mesh.edge_x[e.id]), dtype=float)
            else:
                values[e.id] = np.asarray(f(e, np.zeros(1)), dtype=float)
        return cls.from_edge_values(mesh, values, nonlinearity, tail_rate, atol)

    @classmethod
    def from_edge_values(cls, mesh: Mesh, values: Mapping[str, np.ndarray],
                         nonlinearity: str = LOCALIZED, tail_rate: float | None = None,
                         atol: float = 1e-12) -> GraphField:
        """Assemble from per-edge samples, checking agreement at shared vertices.

        For exact tails only ``values[id][0]`` (the vertex value) is read.
        """
        dofs = np.full(mesh.ndof, np.nan)
        for e in mesh.graph.edges:
            if e.id not in values:
                raise InputError(f"missing samples for edge {e.id}")
            u = np.asarray(values[e.id], dtype=float)
            if e.id in mesh.slices:
                sl = mesh.slices[e.id]
                d = mesh.sample_dof[sl]
                if u.shape != (sl.stop - sl.start,):
                    raise InputError(f"edge {e.id}: expected {sl.stop - sl.start} samples, got {u.shape}")
                if d[-1] < 0 and abs(u[-1]) > atol:
                    raise FieldInconsistent(f"edge {e.id}: truncated half-line must vanish at R")
                pairs = [(d[0], u[0]), (d[-1], u[-1])]
                dofs[d[1:-1]] = u[1:-1]
            else:
                pairs = [(mesh.vertex_index[e.tail], u[0])]
            for k, val in pairs:
                if k < 0:
                    continue
                if np.isnan(dofs[k]):
                    dofs[k] = val
                elif abs(dofs[k] - val) > atol:
                    v = mesh.graph.vertices[k]
                    raise FieldInconsistent(f"edges disagree at vertex {v}: {dofs[k]!r} vs {val!r}")
        # isolated vertices cannot occur in a connected graph with edges
        dofs = np.nan_to_num(dofs)
        return cls(mesh, dofs, nonlinearity, tail_rate)

    @classmethod
    def zeros(cls, mesh: Mesh, nonlinearity: str = LOCALIZED, tail_rate: float | None = None):
        if mesh.tails and tail_rate is None:
            tail_rate = 1.0
        return cls(mesh, np.zeros(mesh.ndof), nonlinearity, tail_rate)


# -- functionals ------------------------------------------------------------


@dataclass(frozen=True)
class Functionals:
    mass: float
    kinetic: float
    potential: float
    energy: float
    multiplier: float | None


def mass(u: GraphField) -> float:
    total = u.mesh.sample_mass(u.samples)
    if u.mesh.tails:
        total += np.sum(u.tail_values ** 2) / (2.0 * u.tail_rate)
    return float(total)


def kinetic(u: GraphField) -> float:
    """Dirichlet integral of the piecewise-linear interpolant (plus exact tails)."""
    total = u.mesh.sample_kinetic(u.samples)
    if u.mesh.tails:
        total += u.tail_rate * np.sum(u.tail_values ** 2) / 2.0
    return float(total)


def potential(u: GraphField, p: float) -> float:
    """Trapezoid integral of |u|^p over the nonlinear region."""
    return float(u.mesh.sample_lp(u.samples, p, u.mesh.kappa(u.nonlinearity)))


def energy(u: GraphField, p: float) -> float:
    return 0.5 * kinetic(u) - potential(u, p) / p


def lagrange_multiplier(u: GraphField, p: float) -> float:
    m = mass(u)
    if m <= 0:
        raise ZeroMass("multiplier undefined for the zero field")
    return (potential(u, p) - kinetic(u)) / m


def functionals(u: GraphField, p: float) -> Functionals:
    m, t, pot = mass(u), kinetic(u), potential(u, p)
    lam = (pot - t) / m if m > 0 else None
    return Functionals(m, t, pot, 0.5 * t - pot / p, lam)


def lp_norm_p(u: GraphField, p: float) -> float:
    """``||u||_p^p`` over the whole graph; ``p = inf`` gives the max norm."""
    if math.isinf(p):
        vals = [np.max(np.abs(u.samples), initial=0.0)]
        if u.mesh.tails:
            vals.append(np.max(np.abs(u.tail_values)))
        return float(max(vals))
    total = u.mesh.sample_lp(u.samples, p)
    if u.mesh.tails:
        total += np.sum(np.abs(u.tail_values) ** p) / (p * u.tail_rate)
    return float(total)


# -- residuals --------------------------------------------------------------


def stationary_residual(u: GraphField, lam: float, p: float) -> dict[str, float]:
    """Max over interior samples of |u'' + kappa|u|^{p-2}u - lam u| per edge.

    Exact tails solve the linear equation identically and report 0.
    """
    m = u.mesh
    kap = m.kappa(u.nonlinearity)
    out = {}
    for e in u.graph.edges:
        if e.id not in m.slices:
            out[e.id] = 0.0
            continue
        sl = m.slices[e.id]
        s = u.samples[sl]
        h = m.edge_h[e.id]
        mid = s[1:-1]
        r = (s[2:] - 2.0 * mid + s[:-2]) / (h * h) - lam * mid
        if kap[sl][0]:
            r = r + np.abs(mid) ** (p - 2) * mid
        out[e.id] = float(np.max(np.abs(r), initial=0.0))
    return out


def max_stationary_residual(u: GraphField, lam: float, p: float) -> float:
    return max(stationary_residual(u, lam, p).values(), default=0.0)


def outward_derivative(u: GraphField, e: Edge, end: int) -> float:
    """Second-order one-sided derivative at an edge end, pointing into the edge."""
    m = u.mesh
    if e.id not in m.slices:
        return -u.tail_rate * u.vertex_value(e.tail)
    s = u.samples[m.slices[e.id]]
    h = m.edge_h[e.id]
    if end == 0:
        return (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * h)
    return (-3.0 * s[-1] + 4.0 * s[-2] - s[-3]) / (2.0 * h)


def kirchhoff_residual(u: GraphField) -> tuple[dict[str, float], float]:
    """Signed sum of outgoing derivatives at every vertex, and the max modulus."""
    res = {}
    for v in u.graph.vertices:
        res[v] = float(sum(outward_derivative(u, e, end) for e, end in u.graph.incident(v)))
    return res, max((abs(r) for r in res.values()), default=0.0)


def support_classification(u: GraphField, tol: float = 1e-8) -> Support:
    if np.max(np.abs(u.dofs), initial=0.0) < tol:
        return Support.ZERO
    m = u.mesh
    half = 0.0
    for e in u.graph.halflines:
        if e.id in m.slices:
            half = max(half, float(np.max(np.abs(u.samples[m.slices[e.id]]))))
        else:
            half = max(half, abs(u.vertex_value(e.tail)))
    return Support.ON_K if half < tol else Support.ON_G


# -- random fields ------------------------------------------------------------


def random_fields(mesh: Mesh, n: int, seed=0, max_modes: int = 5) -> np.ndarray:
    """``n`` random H^1 fields as a ``(n, ndof)`` array (deterministic in ``seed``).

    Bounded edges: up to ``max_modes`` Fourier modes, shifted by an affine
    correction to hit random vertex values.  Truncated half-lines: vertex value
    plus sine modes, damped by ``exp(-a x)(1 - x/R)``.
    """
    rng = np.random.default_rng(seed)
    g = mesh.graph
    out = np.zeros((n, mesh.ndof))
    vert = rng.normal(size=(n, len(g.vertices)))
    out[:, : len(g.vertices)] = vert
    for e in g.edges:
        if e.id not in mesh.slices:
            continue
        x = mesh.edge_x[e.id]
        d = mesh.sample_dof[mesh.slices[e.id]]
        K = rng.integers(1, max_modes + 1, size=n)
        keep = np.arange(1, max_modes + 1)[None, :] <= K[:, None]
        a = rng.normal(size=(n, max_modes)) * keep / np.arange(1, max_modes + 1)
        b = rng.normal(size=(n, max_modes)) * keep / np.arange(1, max_modes + 1)
        c0 = vert[:, mesh.vertex_index[e.tail]]
        if e.bounded:
            length = x[-1]
            k = np.arange(1, max_modes + 1)[:, None]
            phase = 2.0 * np.pi * k * x[None, :] / length
            f = a @ np.sin(phase) + b @ np.cos(phase)
            c1 = vert[:, mesh.vertex_index[e.head]]
            t = x / length
            f += (c0 - f[:, 0])[:, None] * (1.0 - t) + (c1 - f[:, -1])[:, None] * t
        else:
            R = x[-1]
            omega = rng.uniform(0.2, 3.0, size=(n, max_modes))
            decay = rng.uniform(0.2, 2.0, size=n)
            f = c0[:, None] + np.einsum("nk,nkx->nx", a, np.sin(omega[:, :, None] * x[None, None, :]))
            f *= np.exp(-decay[:, None] * x[None, :]) * (1.0 - x / R)[None, :]
        out[:, d[1:-1]] = f[:, 1:-1]
    return out


def random_field(mesh: Mesh, seed=0, nonlinearity: str = LOCALIZED, max_modes: int = 5,
                 tail_rate: float | None = None) -> GraphField:
    dofs = random_fields(mesh, 1, seed, max_modes)[0]
    if mesh.tails and tail_rate is None:
        tail_rate = 1.0
    return GraphField(mesh, dofs, nonlinearity, tail_rate)
