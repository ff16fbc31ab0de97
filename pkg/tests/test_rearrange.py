import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphnls import field as fld
from graphnls.field import GraphField, GridSpec, Mesh, TRUNCATED
from graphnls.graph import GALLERY, build_graph, named_graph
from graphnls.rearrange import (decreasing_rearrangement, gn_check, gn_margins_batch, p1_norm_p,
                                p1_power_integral)
from graphnls.thresholds import gn_constant

MESHES = {}


def mesh_for(name, h=0.05):
    if name not in MESHES:
        g = named_graph(name)
        MESHES[name] = Mesh(g, GridSpec.build(g, h, R=6.0), TRUNCATED)
    return MESHES[name]


@pytest.mark.parametrize("p", [2.0, 3.0, 4.0, 5.5])
def test_power_integral_against_quadrature(p):
    rng = np.random.default_rng(0)
    for a, b in rng.normal(size=(20, 2)):
        x = np.linspace(0, 1, 200001)
        f = np.abs(a + (b - a) * x) ** p
        ref = np.sum(f[1:] + f[:-1]) / 2 / 200000
        assert p1_power_integral(a, b, 1.0, p) == pytest.approx(ref, rel=1e-8)


def test_monotone_field_is_fixed():
    g = build_graph(["o"], [], ["o"])
    h = 0.01
    mesh = Mesh(g, GridSpec.build(g, h, R=10.0), TRUNCATED)
    s = np.exp(-mesh.edge_x["h0"])
    s[-1] = 0.0
    u = GraphField.from_edge_values(mesh, {"h0": s}, atol=1.0)
    r = decreasing_rearrangement(u)
    assert np.max(np.abs(r(mesh.edge_x["h0"]) - s)) < h * 1.0
    assert r.kinetic == pytest.approx(fld.kinetic(u), rel=1e-9)


@given(st.sampled_from(GALLERY), st.integers(0, 10**6))
def test_equimeasurable_and_polya_szego(name, seed):
    u = fld.random_field(mesh_for(name), seed=seed)
    r = decreasing_rearrangement(u)
    for p in (2.0, 4.0, math.inf):
        assert r.lp_norm_p(p) == pytest.approx(p1_norm_p(u, p), rel=1e-9)
    assert r.kinetic <= fld.kinetic(u) + 1e-9
    assert np.all(np.diff(r.values) <= 0)
    assert r.measure == pytest.approx(sum(float(e.length) for e in u.graph.bounded_edges)
                                      + 6.0 * len(u.graph.halflines), rel=1e-12)


def test_sign_changes_are_split():
    g = named_graph("segment_halfline")
    mesh = Mesh(g, GridSpec.build(g, 0.5, R=1.0), TRUNCATED)
    u = GraphField.from_edge_values(mesh, {"e0": np.array([1.0, -1.0, 1.0]), "h0": np.array([1.0, 0.5, 0.0])})
    r = decreasing_rearrangement(u)
    assert r.lp_norm_p(2) == pytest.approx(p1_norm_p(u, 2), rel=1e-12)
    assert r.kinetic <= fld.kinetic(u)


def test_gn_p2_is_identity():
    u = fld.random_field(mesh_for("tadpole"), seed=4)
    c = gn_check(u, 2.0)
    assert c.lhs == pytest.approx(c.rhs, rel=1e-12)
    assert c.satisfied


def test_gn_tadpole_sweep_p4():
    mesh = mesh_for("tadpole")
    margins = gn_margins_batch(mesh, fld.random_fields(mesh, 1000, seed=41), 4.0, gn_constant(4.0))
    assert margins.min() > 0


def test_batch_matches_single():
    mesh = mesh_for("two_pendant")
    dofs = fld.random_fields(mesh, 5, seed=2)
    batch = gn_margins_batch(mesh, dofs, 5.0)
    single = [gn_check(GraphField(mesh, d), 5.0).margin for d in dofs]
    assert np.allclose(batch, single, rtol=1e-12)


def test_gn_with_wrong_constant_fails():
    u = fld.random_field(mesh_for("tadpole"), seed=9)
    assert not gn_check(u, 4.0, constants=1e-3).satisfied
