import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphnls import field as fld
from graphnls.errors import FieldInconsistent, InputError, ZeroMass
from graphnls.field import (EVERYWHERE, EXACT_TAIL, LOCALIZED, TRUNCATED, GraphField, GridSpec, Mesh,
                            Support)
from graphnls.graph import GALLERY, build_graph, named_graph


def halfline_field(h, R=40.0, f=lambda x: np.exp(-x)):
    g = build_graph(["o"], [], ["o"])
    mesh = Mesh(g, GridSpec.build(g, h, R=R), TRUNCATED)
    s = f(mesh.edge_x["h0"])
    s[-1] = 0.0
    return GraphField.from_edge_values(mesh, {"h0": s}, atol=1.0)


def test_exponential_functionals():
    u = halfline_field(1e-3)
    assert abs(fld.mass(u) - 0.5) < 1e-6
    assert abs(fld.energy(u, 4) - 0.25) < 1e-5
    assert fld.potential(u, 4) == 0.0
    assert abs(fld.lagrange_multiplier(u, 4) + 1.0) < 1e-5


def test_exponential_kirchhoff_is_slope():
    res, worst = fld.kirchhoff_residual(halfline_field(1e-3))
    assert abs(abs(res["o"]) - 1.0) < 1e-5
    assert worst == pytest.approx(abs(res["o"]))


def test_exponential_stationary_residual_order():
    r = [fld.max_stationary_residual(halfline_field(h), 1.0, 4) for h in (1e-2, 5e-3, 2.5e-3)]
    orders = np.log2(np.array(r[:-1]) / np.array(r[1:]))
    assert np.all(np.abs(orders - 2) < 0.2)


def test_zero_field():
    g = named_graph("tadpole")
    mesh = Mesh(g, GridSpec.build(g, 0.1, R=5.0), TRUNCATED)
    z = GraphField.zeros(mesh)
    assert fld.mass(z) == 0 and fld.energy(z, 4) == 0
    assert fld.max_stationary_residual(z, 1.0, 4) == 0
    assert fld.support_classification(z) == Support.ZERO
    with pytest.raises(ZeroMass):
        fld.lagrange_multiplier(z, 4)


def test_exact_tail_closed_forms():
    g = named_graph("segment_halfline")
    mesh = Mesh(g, GridSpec.build(g, 0.01), EXACT_TAIL)
    rate = 2.0
    u = GraphField.from_function(mesh, lambda e, x: np.ones_like(x), tail_rate=rate)
    assert fld.mass(u) == pytest.approx(1.0 + 1.0 / (2 * rate), rel=1e-12)
    assert fld.kinetic(u) == pytest.approx(rate / 2, rel=1e-12)
    assert fld.support_classification(u) == Support.ON_G
    with pytest.raises(InputError):
        GraphField(mesh, u.dofs, EVERYWHERE, rate)
    with pytest.raises(InputError):
        GraphField(mesh, u.dofs, LOCALIZED, None)


def test_vertex_consistency_enforced():
    g = named_graph("segment_halfline")
    mesh = Mesh(g, GridSpec.build(g, 0.25, R=1.0), TRUNCATED)
    good = {"e0": np.linspace(0, 1, 5), "h0": np.array([1.0, 0.5, 0.25, 0.1, 0.0])}
    GraphField.from_edge_values(mesh, good)
    bad = dict(good, h0=np.array([0.9, 0.5, 0.25, 0.1, 0.0]))
    with pytest.raises(FieldInconsistent):
        GraphField.from_edge_values(mesh, bad)
    with pytest.raises(FieldInconsistent):
        GraphField.from_edge_values(mesh, dict(good, h0=np.array([1.0, 0.5, 0.25, 0.1, 0.2])))


def test_grid_has_three_points_per_edge():
    g = named_graph("tadpole", loop="1/100")
    grid = GridSpec.build(g, 1.0, R=3.0)
    assert grid.counts["e0"] >= 2
    assert GridSpec.from_dict(grid.to_dict()) == grid
    with pytest.raises(InputError):
        GridSpec(0.1, {"e0": 1})


def test_fields_are_immutable():
    g = named_graph("tadpole")
    u = fld.random_field(Mesh(g, GridSpec.build(g, 0.1, R=5.0), TRUNCATED), seed=1)
    with pytest.raises(ValueError):
        u.dofs[0] = 1.0


def test_default_truncation():
    assert fld.default_truncation(4.0) == pytest.approx(20.0)
    assert fld.default_truncation(0.0) == pytest.approx(40 / math.sqrt(0.05))


def _mesh(name):
    g = named_graph(name)
    return Mesh(g, GridSpec.build(g, 0.05, R=5.0), TRUNCATED)


MESHES = {name: _mesh(name) for name in GALLERY}


@given(st.sampled_from(GALLERY), st.integers(0, 10**6), st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3),
       st.sampled_from([3.0, 4.0, 5.0]))
def test_homogeneity_and_multiplier_identity(name, seed, c, p):
    mesh = MESHES[name]
    u = fld.random_field(mesh, seed=seed)
    v = u.scaled(c)
    assert fld.mass(v) == pytest.approx(c * c * fld.mass(u), rel=1e-12)
    assert fld.potential(v, p) == pytest.approx(abs(c) ** p * fld.potential(u, p), rel=1e-12)
    f = fld.functionals(u, p)
    assert f.multiplier * f.mass == pytest.approx(f.potential - f.kinetic, rel=1e-12, abs=1e-12)
    assert f.energy == pytest.approx(f.kinetic / 2 - f.potential / p, rel=1e-12, abs=1e-12)


@given(st.integers(0, 10**6), st.floats(0.1, 4))
def test_multiplier_homogeneity_p4(seed, c):
    u = fld.random_field(MESHES["tadpole"], seed=seed)
    P, T, M = fld.potential(u, 4), fld.kinetic(u), fld.mass(u)
    lam = fld.lagrange_multiplier(u.scaled(c), 4)
    assert lam == pytest.approx((c**4 * P - c**2 * T) / (c**2 * M), rel=1e-10, abs=1e-10)


@given(st.sampled_from(GALLERY), st.integers(0, 10**6))
def test_random_fields_are_continuous(name, seed):
    mesh = MESHES[name]
    u = fld.random_field(mesh, seed=seed)
    values = {e.id: u.edge_values(e.id)[1] for e in mesh.graph.edges}
    back = GraphField.from_edge_values(mesh, values, atol=0.0)
    assert np.array_equal(back.dofs, u.dofs)


def test_random_fields_deterministic():
    mesh = MESHES["double_bridge"]
    a = fld.random_fields(mesh, 3, seed=5)
    assert np.array_equal(a, fld.random_fields(mesh, 3, seed=5))
    assert not np.array_equal(a, fld.random_fields(mesh, 3, seed=6))


def test_everywhere_potential_includes_halflines():
    mesh = MESHES["segment_halfline"]
    u = fld.random_field(mesh, seed=3)
    w = GraphField(mesh, u.dofs, EVERYWHERE)
    assert fld.potential(w, 4) >= fld.potential(u, 4)
    assert fld.potential(w, 4) == pytest.approx(fld.lp_norm_p(u, 4))
