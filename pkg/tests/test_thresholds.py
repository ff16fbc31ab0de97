import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphnls import field as fld
from graphnls.errors import InvalidProblem, LambdaNegative, POutOfRange
from graphnls.field import GridSpec, Mesh, Support, TRUNCATED
from graphnls.graph import build_graph, named_graph
from graphnls.solver import BoundStateResult
from graphnls.thresholds import (C_INF, bound_state_threshold, classify_regime, gn_constant,
                                 ground_state_threshold, half_soliton_constant, kinetic_bounds,
                                 lemma31_check, scale_invariant_mass, sharp_gn_constants,
                                 threshold_ratio)

# frozen from scripts/gn_oracle.py (independent quadrature of the half-soliton ratio)
C4_ORACLE = 1.15470053838
C5_ORACLE = 1.34711350919
C_STAR_5 = 0.1312262805551777
C_DBLSTAR_5 = 0.8201642534698607


def test_trivial_constants():
    assert sharp_gn_constants(2).C_p == 1.0
    assert sharp_gn_constants(math.inf).C_p == math.sqrt(2)
    assert C_INF == math.sqrt(2)


def test_golden_values():
    assert gn_constant(4.0) == pytest.approx(C4_ORACLE, abs=1e-11)
    assert gn_constant(5.0) == pytest.approx(C5_ORACLE, abs=1e-11)
    assert sharp_gn_constants(4.0).source.startswith("golden")


@pytest.mark.parametrize("p", [2.5, 3.0, 4.0, 4.5, 5.0, 5.5, 6.0, 8.0, 10.0])
def test_closed_form_matches_golden(p):
    assert half_soliton_constant(p) == pytest.approx(gn_constant(p), rel=1e-10)


def test_exponential_attains_linf_constant():
    # ||u||_inf^4 = C^4 ||u||_2^2 ||u'||_2^2 for u = e^{-x}: 1 = C^4 / 4
    assert C_INF ** 4 * 0.5 * 0.5 == pytest.approx(1.0)


def test_constant_is_continuous():
    ps = np.linspace(2.0, 10.0, 401)
    c = np.array([gn_constant(p) for p in ps])
    assert np.all(np.abs(np.diff(c)) / c[1:] < 0.01)


def test_thresholds_p4_exact():
    assert bound_state_threshold(4) == 0.25
    assert ground_state_threshold(4) == 0.5


def test_thresholds_p5():
    assert bound_state_threshold(5) == pytest.approx(C_STAR_5, rel=1e-10)
    assert ground_state_threshold(5) == pytest.approx(C_DBLSTAR_5, rel=1e-10)
    assert ground_state_threshold(5) == pytest.approx(2.5 ** 2 * bound_state_threshold(5), rel=1e-14)


@pytest.mark.parametrize("p", [3.9, 6.0, 7.0])
def test_threshold_range(p):
    with pytest.raises(POutOfRange):
        bound_state_threshold(p)
    with pytest.raises(POutOfRange):
        ground_state_threshold(p)


@given(st.floats(4.0, 5.99))
def test_threshold_ratio(p):
    assert ground_state_threshold(p) / bound_state_threshold(p) == pytest.approx(threshold_ratio(p), rel=1e-13)
    assert ground_state_threshold(p) > bound_state_threshold(p)


def test_scale_invariant_mass_examples():
    assert scale_invariant_mass(0.5, 0.5, 4) == 0.25
    assert scale_invariant_mass(1, 8, 3) == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(POutOfRange):
        scale_invariant_mass(1, 1, 6)


def test_classify_segment_halfline_small_mass():
    r = classify_regime(named_graph("segment_halfline"), 4, 0.2)
    assert r.no_bound_any and r.no_bound_lambda_nonneg and r.no_lambda_nonpos and r.no_ground
    assert r.m_star == pytest.approx(0.2)
    assert set(r.reasons) == {"no_bound_lambda_nonneg", "no_lambda_nonpos", "no_bound_any", "no_ground"}


def test_classify_tadpole():
    r = classify_regime(named_graph("tadpole", loop=1), 4, 0.2)
    assert r.no_bound_lambda_nonneg and not r.no_bound_any and not r.tree


def test_classify_subcritical():
    r = classify_regime(named_graph("double_bridge"), 3, 0.01)
    assert r.C_star is None and not r.no_bound_lambda_nonneg and not r.no_ground
    assert any("ground state exists" in note for note in r.existence)


def test_classify_two_pendant_not_excluded():
    r = classify_regime(named_graph("two_pendant"), 4, 0.01)
    assert r.tree and r.pendants == 2 and not r.no_lambda_nonpos and not r.no_bound_any


def test_classify_errors():
    with pytest.raises(InvalidProblem):
        classify_regime(build_graph(["a", "b"], [("a", "b", 1)], []), 4, 1)
    with pytest.raises(InvalidProblem):
        classify_regime(named_graph("tadpole"), 6, 1)
    with pytest.raises(InvalidProblem):
        classify_regime(named_graph("tadpole"), 4, 0)


def _fake_state(lam, kinetic, mass, graph="segment_halfline"):
    g = named_graph(graph)
    u = fld.random_field(Mesh(g, GridSpec.build(g, 0.1, R=2.0), TRUNCATED), seed=0)
    return BoundStateResult(u, 4.0, lam, mass, 0.0, kinetic, 0.0, 0.0, 0.0, 0.0, Support.ON_G, True, 0, "test")


def test_kinetic_bounds_require_nonnegative_lambda():
    with pytest.raises(LambdaNegative):
        lemma31_check(_fake_state(-0.5, 1.0, 1.0), 4)


def test_kinetic_bounds_p4():
    # at p = 4 the lower bound reads 1 >= 1/(4 l mu)
    assert kinetic_bounds(1.0, 1.0, 1.0, 4).bas_ok
    assert not kinetic_bounds(1.0, 0.2, 1.0, 4).bas_ok
    hi = gn_constant(4) ** 2 * 1.0 ** 3
    assert kinetic_bounds(hi * 0.99, 1.0, 1.0, 4).alt_ok
    assert not kinetic_bounds(hi * 1.01, 1.0, 1.0, 4).alt_ok
