import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ellipj, ellipk

from graphnls import field as fld
from graphnls.constructions import (cycle_compact_state, double_bridge_state, pendant_compact_state,
                                    pendant_geometry, reflection_defect)
from graphnls.errors import GeometryMismatch, HalfGraphNonConvergence, NoCommensurableCycle
from graphnls.field import EVERYWHERE, LOCALIZED, Support
from graphnls.graph import MetricGraph, build_graph, named_graph
from graphnls.solver import SolverOptions, newton_bound_state


def cnoidal_mass(m, lam):
    """Closed-form odd wave for p=4: (half period, mass over one full period)."""
    n = m * m
    b = math.sqrt(-lam / (1 - n))
    a = math.sqrt(2 * n) * b
    mm = n / (1 + n)
    T = 2 * ellipk(-n) / b

    def phi2(x):
        sn, _, dn, _ = ellipj(math.sqrt(1 + n) * b * x, mm)
        return (a / math.sqrt(1 + n) * sn / dn) ** 2

    return T, 2 * quad(phi2, 0, T, epsabs=1e-13, epsrel=1e-13)[0]


def off_support_max(r, ids):
    return max(float(np.max(np.abs(r.field.edge_values(e)[1]))) for e in ids)


def test_cycle_mass_against_elliptic_oracle():
    T, mass = cnoidal_mass(0.5, -1.0)
    loop = Fraction(2 * T).limit_denominator(10**9)
    r = cycle_compact_state(named_graph("tadpole", loop=str(loop)), 4, -1.0, h=2e-3)
    assert r.converged and r.support == Support.ON_K
    assert r.mass == pytest.approx(mass, rel=1e-5)
    assert r.stationary_residual < (2e-3) ** 2 and r.kirchhoff_residual < (2e-3) ** 2
    assert abs(fld.lagrange_multiplier(r.field, 4) + 1.0) < 1e-4
    assert off_support_max(r, ["h0"]) == 0.0


def test_cycle_state_is_newton_fixed_point():
    r = cycle_compact_state(named_graph("tadpole"), 4, -2.0, h=2e-3)
    n = newton_bound_state(r.field, 4, lam=-2.0)
    assert n.converged and n.iterations <= 3
    # the construction sits O(h^2) from the discrete solution
    assert np.max(np.abs(n.field.dofs - r.field.dofs)) < 1e-4


def test_cycle_residual_is_second_order():
    g = named_graph("tadpole")
    r1 = cycle_compact_state(g, 4, -2.0, h=4e-3).stationary_residual
    r2 = cycle_compact_state(g, 4, -2.0, h=2e-3).stationary_residual
    assert math.log2(r1 / r2) == pytest.approx(2.0, abs=0.1)


def test_hexagon_vanishes_at_vertices():
    lengths = ["1", "1/2", "1", "1/2", "1", "1/2"]
    verts = [f"v{i}" for i in range(6)]
    g = build_graph(verts, [(verts[i], verts[(i + 1) % 6], lengths[i]) for i in range(6)], ["v0", "v3"])
    r = cycle_compact_state(g, 4, -30.0, h=1e-3)
    assert r.converged and r.support == Support.ON_K
    for e in g.bounded_edges:
        x, s = r.field.edge_values(e.id)
        assert abs(s[0]) < 1e-12 and abs(s[-1]) < 1e-12
        assert np.max(np.abs(s)) > 0.1
    assert off_support_max(r, [e.id for e in g.halflines]) == 0.0


def test_no_commensurable_cycle():
    g = MetricGraph.from_dict({"vertices": ["a", "b"], "edges": [
        {"from": "a", "to": "b", "length": "1"},
        {"from": "a", "to": "b", "length": "sqrt(2)"},
        {"from": "a", "halfline": True}]})
    with pytest.raises(NoCommensurableCycle):
        cycle_compact_state(g, 4, -1.0)
    with pytest.raises(NoCommensurableCycle):
        cycle_compact_state(named_graph("segment_star"), 4, -1.0)


@pytest.mark.parametrize("p", [3.0, 4.0, 5.0])
def test_two_pendant_state(p):
    geo = pendant_geometry(p, -1.0)
    assert geo.wave.k == 1 and geo.xbar == geo.L / 4
    g = named_graph("two_pendant", pendant=str(geo.xbar))
    r = pendant_compact_state(g, p, -1.0, h=2e-3)
    assert r.converged and r.support == Support.ON_K
    assert r.stationary_residual < (2e-3) ** 2 and r.kirchhoff_residual < (2e-3) ** 2
    assert abs(r.field.vertex_value("c")) < 1e-12
    # Neumann tips are the wave's extrema
    assert abs(abs(r.field.vertex_value("t1")) - geo.wave.amplitude) < 1e-9
    assert off_support_max(r, [e.id for e in g.halflines]) == 0.0


def test_three_pendant_path():
    geo = pendant_geometry(4, -1.0)
    g = named_graph("three_pendant_path", pendant=str(geo.xbar), interior=str(geo.L / 2), third="1")
    r = pendant_compact_state(g, 4, -1.0, h=2e-3)
    assert r.converged and r.support == Support.ON_K
    assert r.stationary_residual < (2e-3) ** 2 and r.kirchhoff_residual < (2e-3) ** 2
    for v in ("a1", "a2", "a3", "a4"):
        assert abs(r.field.vertex_value(v)) < 1e-12


def test_pendant_geometry_mismatch():
    with pytest.raises(GeometryMismatch):
        pendant_compact_state(named_graph("two_pendant", pendant1="1", pendant2="1/2"), 4, -1.0)
    with pytest.raises(GeometryMismatch):
        pendant_compact_state(named_graph("two_pendant", pendant="2"), 4, -1.0)
    with pytest.raises(GeometryMismatch):
        pendant_geometry(4, -1.0, L=10)


@pytest.fixture(scope="module")
def bridge():
    return double_bridge_state(1, p=4, mu=1.0, opts=SolverOptions(h=0.01))


def test_double_bridge_mass_doubles(bridge):
    r = bridge.result
    assert r.converged and r.support == Support.ON_G
    assert r.mass == pytest.approx(2 * bridge.half.mass, abs=1e-10)
    assert r.mass == pytest.approx(1.0, abs=1e-8)
    assert bridge.min_value > 0
    assert bridge.symmetry_defect == 0.0 == reflection_defect(r.field)
    assert r.lam > 0 and r.lam == bridge.half.lam


def test_double_bridge_unequal_bridges():
    s = double_bridge_state(1, "3/2", p=4, mu=1.0, opts=SolverOptions(h=0.01))
    assert s.result.converged and s.min_value > 0
    assert s.symmetry_defect == 0.0


def test_localized_half_graph_degenerates():
    with pytest.raises(HalfGraphNonConvergence):
        double_bridge_state(1, p=4, mu=0.1, nonlinearity=LOCALIZED, opts=SolverOptions(h=0.02))


def test_everywhere_is_default_nonlinearity(bridge):
    assert bridge.result.field.nonlinearity == EVERYWHERE
