import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphnls import field as fld
from graphnls.constructions import cycle_compact_state, pendant_compact_state, pendant_geometry
from graphnls.errors import InputError, NegativeLambdaRequested, POutOfRange
from graphnls.field import (EVERYWHERE, EXACT_TAIL, TRUNCATED, GraphField, GridSpec, Mesh,
                            Support)
from graphnls.graph import core_length, named_graph
from graphnls.solver import (SolverOptions, ground_state, multi_start_search, newton_bound_state,
                             scaled_multiplier, scaling_map)
from graphnls.thresholds import lemma31_check, scale_invariant_mass


def assert_converged_invariants(r, mu=None, tol=1e-9):
    assert r.converged
    assert r.stationary_residual < tol and r.kirchhoff_residual < tol
    assert abs(fld.lagrange_multiplier(r.field, r.p) - r.lam) < 10 * tol * max(1.0, abs(r.lam))
    if mu is not None:
        assert abs(r.mass - mu) < tol * max(1.0, mu)
    if r.support == Support.ON_G:
        assert r.lam > 0


@pytest.fixture(scope="module")
def ground_p3():
    return ground_state(named_graph("segment_halfline"), 3, 1.0)


def test_ground_state_subcritical(ground_p3):
    r = ground_p3
    assert_converged_invariants(r, 1.0)
    assert r.energy <= 1e-8
    # a ground state is positive on the half-line, which forces a positive multiplier
    assert r.lam > 0 and r.support == Support.ON_G
    assert np.min(r.field.samples[r.field.mesh.valid]) > 0
    chk = lemma31_check(r, 3, float(core_length(r.field.graph)))
    assert chk.alt_ok and chk.bas_ok


def test_flow_energy_nonincreasing(ground_p3):
    flow = np.array(ground_p3.history[:-1])
    assert np.all(np.diff(flow) <= 1e-14 * np.abs(flow[1:]).clip(1.0))


def test_no_ground_state_below_threshold():
    r = ground_state(named_graph("segment_halfline"), 4, 0.1)
    assert not r.converged and r.support == Support.ZERO
    assert "escaped" in r.message


def test_double_bridge_everywhere_minimum_not_attained():
    mu = 1.0
    g = named_graph("double_bridge")
    r = ground_state(g, 4, mu, nonlinearity=EVERYWHERE)
    line_level = -mu**3 / 96
    # whatever the flow settles on stays strictly above the line-soliton level ...
    assert r.energy > line_level
    # ... which a soliton sliding out along a half-line approaches
    lam = (mu / 4) ** 2

    def sol(e, x):
        if e.id == "h0":
            return math.sqrt(2 * lam) / np.cosh(math.sqrt(lam) * (x - 200.0))
        return np.zeros_like(x) + math.sqrt(2 * lam) / math.cosh(math.sqrt(lam) * 200.0)

    grid = GridSpec.build(g, 0.05, R=400.0)
    far = GraphField.from_function(Mesh(g, grid, TRUNCATED), sol, EVERYWHERE, atol=1e-9)
    far = far.scaled(math.sqrt(mu / fld.mass(far)))
    assert fld.energy(far, 4) < r.energy
    assert fld.energy(far, 4) == pytest.approx(line_level, rel=1e-3)


def test_newton_large_mass_state():
    states = multi_start_search(named_graph("segment_halfline"), 4, 10.0, 3, SolverOptions(seed=1))
    pos = [s for s in states if s.lam > 0 and s.energy < 0]
    assert pos
    for s in pos:
        assert_converged_invariants(s, 10.0)
        chk = lemma31_check(s, 4, 1.0)
        assert chk.alt_ok and chk.bas_ok


def test_exact_tails_reject_nonpositive_lambda():
    g = named_graph("segment_halfline")
    mesh = Mesh(g, GridSpec.build(g, 0.05), EXACT_TAIL)
    u = fld.random_field(mesh, seed=0, tail_rate=1.0)
    with pytest.raises(NegativeLambdaRequested):
        newton_bound_state(u, 4, lam=-1.0)
    with pytest.raises(POutOfRange):
        newton_bound_state(u, 6, lam=1.0)


def test_options_validation():
    with pytest.raises(InputError):
        SolverOptions(tol=0)


@pytest.fixture(scope="module")
def cycle_state():
    return cycle_compact_state(named_graph("tadpole", loop=2), 4, -1.0, h=5e-3)


def test_newton_from_construction_is_fixed_point(cycle_state):
    c = cycle_state
    r = newton_bound_state(c.field, 4, lam=-1.0)
    assert r.converged and r.iterations <= 3
    assert abs(fld.lagrange_multiplier(r.field, 4) + 1.0) < 1e-8
    rm = newton_bound_state(c.field, 4, mu=c.mass, lam=-1.0)
    assert_converged_invariants(rm, c.mass)
    # the fixed-mass solution sits at the discrete multiplier, an O(h^2) shift
    assert abs(rm.lam + 1.0) < 1e-3


def test_newton_converges_quadratically(cycle_state):
    c = cycle_state
    rng = np.random.default_rng(0)
    start = c.field.with_dofs(c.field.dofs * (1 + 0.02 * rng.standard_normal(c.field.mesh.ndof)))
    r = newton_bound_state(start, 4, lam=-1.0)
    assert r.converged
    e = np.array([x for x in r.history if x > 1e-7])
    assert len(e) >= 3
    ratios = e[1:] / e[:-1] ** 2
    assert np.all(ratios[-3:] < 1e3)


def test_multi_start_small_mass_tadpole():
    g = named_graph("tadpole", loop=2)
    mu = 0.1  # l*mu = 0.2 < 1/4
    states = multi_start_search(g, 4, mu, 10, SolverOptions(seed=3))
    for s in states:
        assert s.lam < 0 and s.support == Support.ON_K
        assert_converged_invariants(s, mu)


def test_nonpositive_probe_on_tree():
    states = multi_start_search(named_graph("segment_star"), 3, 1.0, 10, SolverOptions(seed=5), exact_tail=False)
    assert [s for s in states if s.lam <= 0] == []


def test_two_pendant_recovered_from_construction():
    geo = pendant_geometry(4, -1.0)
    g = named_graph("two_pendant", pendant=geo.xbar)
    c = pendant_compact_state(g, 4, -1.0, h=2e-3)
    states = multi_start_search(g, 4, c.mass, 2, SolverOptions(seed=0), exact_tail=False, seeds=[c.field])
    hits = [s for s in states if s.support == Support.ON_K and abs(s.lam + 1.0) < 1e-3]
    assert hits
    assert_converged_invariants(hits[0], c.mass)


def test_search_is_deterministic(monkeypatch):
    g = named_graph("tadpole", loop=2)
    a = multi_start_search(g, 4, 3.0, 4, SolverOptions(seed=11))
    monkeypatch.setenv("GRAPHNLS_THREADS", "3")
    b = multi_start_search(g, 4, 3.0, 4, SolverOptions(seed=11))
    assert [s.lam for s in a] == [s.lam for s in b]
    assert all(np.array_equal(x.field.dofs, y.field.dofs) for x, y in zip(a, b))


def test_search_report_counts():
    rep = multi_start_search(named_graph("segment_halfline"), 4, 0.1, 5, SolverOptions(seed=2), report=True)
    assert rep.states == []
    assert rep.attempts == 10
    assert sum(rep.rejected.values()) == rep.attempts


def test_scaling_identity_and_p4():
    g = named_graph("segment_halfline")
    u = fld.random_field(Mesh(g, GridSpec.build(g, 0.05, R=5.0), TRUNCATED), seed=1)
    g1, u1 = scaling_map(u, 1, 4)
    assert g1.to_dict() == g.to_dict() and np.array_equal(u1.dofs, u.dofs)
    g2, u2 = scaling_map(u, 2, 4)
    assert core_length(g2) == core_length(g) / 2
    assert fld.mass(u2) == pytest.approx(2 * fld.mass(u), rel=1e-10)
    assert scaled_multiplier(-1.0, 2, 4) == -4.0


@given(st.sampled_from([3.0, 4.0, 5.0]), st.floats(0.05, 20.0), st.integers(0, 1000))
@settings(max_examples=15)
def test_scale_invariant_mass_preserved(p, theta, seed):
    g = named_graph("tadpole")
    u = fld.random_field(Mesh(g, GridSpec.build(g, 0.1, R=4.0), TRUNCATED), seed=seed)
    g2, u2 = scaling_map(u, theta, p)
    assert fld.mass(u2) == pytest.approx(theta * fld.mass(u), rel=1e-12)
    m0 = scale_invariant_mass(float(core_length(g)), fld.mass(u), p)
    m1 = scale_invariant_mass(float(core_length(g2)), fld.mass(u2), p)
    assert m1 == pytest.approx(m0, rel=1e-12)


def test_scaling_conjugates_residual(cycle_state):
    r0 = cycle_state.stationary_residual
    for theta in (0.5, 3.0):
        _, u2 = scaling_map(cycle_state.field, theta, 4)
        r1 = fld.max_stationary_residual(u2, scaled_multiplier(-1.0, theta, 4), 4)
        assert r1 == pytest.approx(theta**3 * r0, rel=1e-6)
