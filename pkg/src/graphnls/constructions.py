"""Explicit bound states: compact states on commensurable cycles and pendant
paths, and the reflected double-bridge state for the everywhere-nonlinear
problem."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import field as fld
from .errors import (BisectionFailure, GeometryMismatch, HalfGraphNonConvergence, InputError,
                     NoCommensurableCycle)
from .field import EVERYWHERE, EXACT_TAIL, LOCALIZED, TRUNCATED, GraphField, GridSpec, Mesh
from .graph import Edge, MetricGraph, commensurable_cycle, named_graph
from .solver import (BoundStateResult, SolverOptions, _check_p, _result, _System, ground_state,
                     transfer)
from .waves import PeriodicWave, periodic_odd_solution

DEFAULT_H = 1e-3


def _halfline_setup(lam: float, halfline: str | None) -> str:
    if halfline is None:
        return EXACT_TAIL if lam > 0 else TRUNCATED
    return halfline


def _construction_result(u: GraphField, p: float, lam: float, extra: str = "") -> BoundStateResult:
    """Residuals of a construction are discretization diagnostics (O(h^2))."""
    stat = fld.max_stationary_residual(u, lam, p)
    _, kirch = fld.kirchhoff_residual(u)
    return _result(u, p, lam, stat, kirch, True, 0, "construction", extra)


def _mesh(g: MetricGraph, counts: dict[str, int], h: float, halfline: str, R: float | None) -> Mesh:
    if halfline == TRUNCATED and g.halflines:
        grid = GridSpec.build(g, h, R=R or 10.0, h_R=max(h, 0.05), counts=counts)
    else:
        grid = GridSpec.build(g, h, counts=counts)
    return Mesh(g, grid, halfline)


def _lay(mesh: Mesh, placements: dict[str, tuple[Fraction, Fraction, bool]], wave: PeriodicWave,
         tail_rate: float | None) -> GraphField:
    """Evaluate the wave on edges given ``(offset, length, forward)``; zero elsewhere.

    Positions are exact rationals so vertices at wave zeros get exact zeros.
    """
    values = {}
    for e in mesh.graph.edges:
        if e.id in placements:
            off, length, fwd = placements[e.id]
            n = mesh.grid.counts[e.id]
            pos = [off + (length * j / n if fwd else length - length * j / n) for j in range(n + 1)]
            values[e.id] = np.asarray(wave(pos), dtype=float)
        elif e.id in mesh.slices:
            values[e.id] = np.zeros(len(mesh.edge_x[e.id]))
        else:
            values[e.id] = np.zeros(1)
    return GraphField.from_edge_values(mesh, values, LOCALIZED, tail_rate, atol=1e-12)


def cycle_compact_state(g: MetricGraph, p: float, lam: float, h: float = DEFAULT_H,
                        halfline: str | None = None, R: float | None = None) -> BoundStateResult:
    """Odd periodic wave wrapped around a commensurable cycle, zero elsewhere.

    Cycle edges share one step ``L/ceil(L/h)`` (L = gcd of the cycle lengths),
    so one-sided derivative errors cancel through the vertices.
    """
    _check_p(p)
    info = commensurable_cycle(g)
    if info is None:
        raise NoCommensurableCycle("no cycle with pairwise commensurable lengths")
    wave = periodic_odd_solution(info.L, p, lam)
    N = max(2, math.ceil(float(info.L) / h - 1e-9))
    counts = {eid: k * N for eid, k in zip(info.edges, info.multiples)}
    halfline = _halfline_setup(lam, halfline)
    mesh = _mesh(g, counts, h, halfline, R)
    placements = {}
    off = Fraction(0)
    for eid, fwd, k in zip(info.edges, info.forward, info.multiples):
        length = g.edge(eid).length
        placements[eid] = (off, length, fwd)
        off += k * info.L
    u = _lay(mesh, placements, wave, math.sqrt(lam) if halfline == EXACT_TAIL else None)
    return _construction_result(u, p, lam, f"cycle {'-'.join(info.edges)}, L={info.L}, k={info.k}, wave repeats {wave.k}")


@dataclass(frozen=True)
class PendantGeometry:
    xbar: Fraction
    L: Fraction
    wave: PeriodicWave

    @property
    def half_period(self) -> Fraction:
        return self.L / 2


def pendant_geometry(p: float, lam: float, L=None, precision: float = 1e-9) -> PendantGeometry:
    """Pendant length and period for a pendant construction at (p, lambda).

    The period is quantized to a rational with denominator at most
    ``1/precision``; the quarter period (the pendant length) is then exact.
    """
    _check_p(p)
    if L is None:
        # 90% of the small-amplitude period: moderate amplitude, well inside the feasible range
        L = 1.8 * math.pi / math.sqrt(-lam) if lam < 0 else 2.0
    L = Fraction(L).limit_denominator(max(1, int(round(1 / precision))))
    wave = periodic_odd_solution(L, p, lam)
    if wave.k != 1:
        raise GeometryMismatch(f"period {L} is too long for lambda={lam}: the wave would repeat {wave.k} times")
    return PendantGeometry(L / 4, L, wave)


def _core_path(g: MetricGraph, a: str, b: str) -> list[tuple[Edge, bool]] | None:
    """Shortest path of bounded edges from a to b as (edge, runs tail->head)."""
    prev: dict[str, tuple[str, Edge, bool] | None] = {a: None}
    q = deque([a])
    while q:
        v = q.popleft()
        if v == b:
            break
        for e, end in g.incident(v):
            if not e.bounded or e.is_loop:
                continue
            w = e.other(v)
            if w not in prev:
                prev[w] = (v, e, end == 0)
                q.append(w)
    if b not in prev:
        return None
    path = []
    v = b
    while prev[v] is not None:
        u, e, fwd = prev[v]
        path.append((e, fwd))
        v = u
    return path[::-1]


def pendant_compact_state(g: MetricGraph, p: float, lam: float, L=None, h: float = DEFAULT_H,
                          halfline: str | None = None, R: float | None = None) -> BoundStateResult:
    """Wave laid on a tip-to-tip path with Neumann tips, zero elsewhere.

    A valid path starts and ends with pendants of length L/4 (the quarter
    period) and has interior edges of lengths that are multiples of L/2, so
    every interior vertex of the path sits at a zero of the wave.  ``L``
    defaults to four times the first pendant's length.
    """
    _check_p(p)
    tips = [v for v in g.vertices if g.degree(v) == 1]
    reasons = []
    for i, a in enumerate(tips):
        for b in tips[i + 1:]:
            path = _core_path(g, a, b)
            if path is None or len(path) < 2:
                continue
            first, last = path[0][0], path[-1][0]
            period = Fraction(L) if L is not None else 4 * first.length
            xbar = period / 4
            bad = [e.id for e in (first, last) if e.length != xbar]
            bad += [e.id for e, _ in path[1:-1] if (e.length / (period / 2)).denominator != 1]
            if bad:
                reasons.append(f"path {a}->{b}: edges {bad} do not fit x̄={xbar}, L={period}")
                continue
            try:
                wave = periodic_odd_solution(period, p, lam)
            except BisectionFailure as exc:
                reasons.append(f"path {a}->{b}: {exc}")
                continue
            if wave.k != 1:
                reasons.append(f"path {a}->{b}: pendant {xbar} too long for lambda={lam} "
                               f"(needs < {math.pi / (2 * math.sqrt(-lam)):.6g})")
                continue
            return _lay_path(g, path, wave, xbar, p, lam, h, halfline, R, a, b)
    raise GeometryMismatch("no pendant path matches the wave geometry" + (": " + "; ".join(reasons) if reasons else ""))


def _lay_path(g, path, wave, xbar, p, lam, h, halfline, R, a, b) -> BoundStateResult:
    N = max(2, math.ceil(float(xbar) / h - 1e-9))
    counts = {e.id: int(e.length / xbar) * N for e, _ in path}
    halfline = _halfline_setup(lam, halfline)
    mesh = _mesh(g, counts, h, halfline, R)
    placements = {}
    off = -xbar
    for e, fwd in path:
        placements[e.id] = (off, e.length, fwd)
        off += e.length
    u = _lay(mesh, placements, wave, math.sqrt(lam) if halfline == EXACT_TAIL else None)
    ids = "-".join(e.id for e, _ in path)
    return _construction_result(u, p, lam, f"pendant path {a}->{b} via {ids}, x̄={xbar}")


# -- double bridge --------------------------------------------------------------


@dataclass
class DoubleBridgeState:
    result: BoundStateResult
    half: BoundStateResult
    symmetry_defect: float
    min_value: float


def _bridge_lengths(g: MetricGraph) -> tuple[Fraction, Fraction]:
    b = [e for e in g.bounded_edges]
    if len(b) != 2 or len(g.halflines) != 2 or any(e.is_loop for e in b):
        raise InputError("expected a double bridge: two parallel bounded edges and two half-lines")
    return b[0].length, b[1].length


def double_bridge_state(bridge1=1, bridge2=None, p: float = 4.0, mu: float = 1.0,
                        nonlinearity: str = EVERYWHERE, opts: SolverOptions | None = None,
                        h: float = DEFAULT_H) -> DoubleBridgeState:
    """Symmetric state of mass ``mu`` from the half-graph ground state of mass ``mu/2``.

    Bridge midpoints become degree-one vertices of the half graph, where the
    Kirchhoff condition is the Neumann condition the reflection needs.  The
    reflected field is an exact solution of the full discrete system, because
    the discrete equation at a bridge midpoint is twice the half-graph tip
    equation when the neighbours agree.
    """
    _check_p(p)
    bridge2 = bridge1 if bridge2 is None else bridge2
    opts = opts or SolverOptions(h=h)
    half_g = named_graph("half_double_bridge", bridge1=bridge1, bridge2=bridge2)
    full_g = named_graph("double_bridge", bridge1=bridge1, bridge2=bridge2)
    # the half-line step must resolve the vertex derivative to O(h^2) as well
    h_R = opts.h_R or 2 * opts.h
    R = opts.R or 60.0
    half = None
    for _ in range(4):
        grid = GridSpec.build(half_g, opts.h, R=R, h_R=h_R)
        init = None
        if half is not None:
            init = transfer(half.field, Mesh(half_g, grid, TRUNCATED)).dofs
        half = ground_state(half_g, p, mu / 2, grid=grid, nonlinearity=nonlinearity, opts=opts, init=init)
        if not half.converged:
            raise HalfGraphNonConvergence(f"half-graph ground state failed: {half.message}", half)
        need = fld.default_truncation(half.lam)
        if R >= need or R >= 4000:
            break
        R = need
    hm = half.field.mesh
    counts = {"e0": 2 * hm.grid.counts["e0"], "e1": 2 * hm.grid.counts["e1"]}
    full_grid = GridSpec(hm.grid.h, counts, hm.grid.R, hm.grid.n_R)
    mesh = Mesh(full_g, full_grid, TRUNCATED)
    values = {}
    for eid in ("e0", "e1"):
        _, s = half.field.edge_values(eid)
        values[eid] = np.concatenate([s, s[-2::-1]])
    hs = half.field.edge_values("h0")[1]
    values["h0"] = hs
    values["h1"] = hs
    u = GraphField.from_edge_values(mesh, values, nonlinearity, atol=0.0)
    sysm = _System(mesh, p, nonlinearity)
    stat, kirch = sysm.residual_norms(sysm.F(u.dofs, half.lam))
    conv = stat < opts.tol and kirch < opts.tol
    res = _result(u, p, half.lam, stat, kirch, conv, half.iterations, "reflection",
                  f"reflected half-graph ground state (R={R:.6g})")
    defect = reflection_defect(u)
    interior = np.concatenate([u.edge_values(e.id)[1][:-1] if e.halfline else u.edge_values(e.id)[1]
                               for e in full_g.edges])
    return DoubleBridgeState(res, half, defect, float(np.min(interior)))


def reflection_defect(u: GraphField) -> float:
    """max |u(x) - u(sigma x)| for the reflection swapping v1 and v2."""
    d = 0.0
    for eid in ("e0", "e1"):
        s = u.edge_values(eid)[1]
        d = max(d, float(np.max(np.abs(s - s[::-1]))))
    a, b = u.edge_values("h0")[1], u.edge_values("h1")[1]
    return max(d, float(np.max(np.abs(a - b))))
