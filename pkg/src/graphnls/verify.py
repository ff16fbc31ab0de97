"""Acceptance batteries.

Each criterion function returns a list of ``Check`` lines with the measured
values; ``run_suite`` groups them the way the ``verify`` CLI verb exposes
them.  Tolerances are fixed here and nowhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.special import ellipj, ellipk

from . import field as fld
from .constructions import (cycle_compact_state, double_bridge_state, pendant_compact_state,
                            pendant_geometry)
from .field import LOCALIZED, TRUNCATED, GraphField, GridSpec, Mesh, Support
from .graph import GALLERY, build_graph, core_length, named_graph
from .rearrange import decreasing_rearrangement, gn_check, gn_margins_batch, p1_norm_p
from .scan import nonexistence_scan
from .solver import (BoundStateResult, SolverOptions, ground_state, multi_start_search,
                     newton_bound_state, scaled_multiplier, scaling_map)
from .thresholds import (bound_state_threshold, ground_state_threshold,
                         lemma31_check, scale_invariant_mass, threshold_ratio)
from .waves import half_period, periodic_odd_solution


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    measured: str

    def line(self) -> str:
        return f"C{self.criterion} [{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.measured}"


@dataclass
class Audit:
    """Localized states with lambda >= 0 collected for the kinetic-bound audit."""

    states: list[tuple[BoundStateResult, float]] = field(default_factory=list)

    def add(self, states, ell: float) -> None:
        for s in states:
            if s.converged and s.lam >= 0 and s.field.nonlinearity == LOCALIZED:
                self.states.append((s, float(ell)))


# -- 1. thresholds -----------------------------------------------------------------


def criterion_1(audit: Audit | None = None) -> list[Check]:
    c1, c2 = bound_state_threshold(4), ground_state_threshold(4)
    out = [
        Check(1, "C*(4) == 1/4 exactly", c1 == 0.25, f"C*(4)={c1!r}"),
        Check(1, "C**(4) == 1/2 exactly", c2 == 0.5, f"C**(4)={c2!r}"),
    ]
    worst = 0.0
    for p in np.linspace(4.0, 5.9, 20):
        worst = max(worst, abs(ground_state_threshold(p) / bound_state_threshold(p) / threshold_ratio(p) - 1))
    out.append(Check(1, "C**/C* = (p/2)^(2/(6-p)) on [4, 6)", worst < 1e-13, f"max rel dev {worst:.3g}"))
    return out


# -- 2. GN sharpness and sweeps -------------------------------------------------------

GN_EXPONENTS = (3.0, 4.0, 5.0, 6.0, math.inf)
GN_FIELDS = 10_000


def exponential_on_halfline(h: float = 1e-3, R: float = 40.0) -> GraphField:
    g = build_graph(["o"], [], ["o"])
    mesh = Mesh(g, GridSpec.build(g, h, R=R), TRUNCATED)
    values = {"h0": np.exp(-mesh.edge_x["h0"])}
    values["h0"][-1] = 0.0
    return GraphField.from_edge_values(mesh, values, atol=1.0)


def criterion_2(audit: Audit | None = None, n_fields: int = GN_FIELDS, seed: int = 2024) -> list[Check]:
    u = exponential_on_halfline()
    chk = gn_check(u, math.inf)
    gap = abs(chk.lhs - chk.rhs)
    out = [Check(2, "e^-x attains the L^inf GN bound (h=1e-3)", gap < 1e-5,
                 f"||u||_inf={chk.lhs:.12g}, sqrt2*|u|_2^1/2*|u'|_2^1/2={chk.rhs:.12g}, gap={gap:.3g}")]
    for k, name in enumerate(GALLERY):
        g = named_graph(name)
        mesh = Mesh(g, GridSpec.build(g, 0.05, R=20.0), TRUNCATED)
        dofs = fld.random_fields(mesh, n_fields, seed=[seed, k])
        worst = {p: float(np.min(gn_margins_batch(mesh, dofs, p))) for p in GN_EXPONENTS}
        low = min(worst.values())
        detail = ", ".join(f"p={p:g}: {m:.3g}" for p, m in worst.items())
        out.append(Check(2, f"GN sweep {name} ({n_fields} fields)", low >= -1e-6, f"min margins {detail}"))
    return out


# -- 3. rearrangement ----------------------------------------------------------------------


def criterion_3(audit: Audit | None = None, n_fields: int = 100, seed: int = 3) -> list[Check]:
    norm_err = {2: 0.0, 4: 0.0}
    kin_excess = -math.inf
    for i in range(n_fields):
        g = named_graph(GALLERY[i % len(GALLERY)])
        mesh = Mesh(g, GridSpec.build(g, 0.02, R=10.0), TRUNCATED)
        u = fld.random_field(mesh, seed=[seed, i])
        r = decreasing_rearrangement(u)
        for p in norm_err:
            a, b = p1_norm_p(u, p) ** (1 / p), r.lp_norm_p(p) ** (1 / p)
            norm_err[p] = max(norm_err[p], abs(a - b))
        kin_excess = max(kin_excess, r.kinetic - fld.kinetic(u))
    return [
        Check(3, f"||u*||_2 = ||u||_2 on {n_fields} fields", norm_err[2] < 1e-6, f"max error {norm_err[2]:.3g}"),
        Check(3, f"||u*||_4 = ||u||_4 on {n_fields} fields", norm_err[4] < 1e-6, f"max error {norm_err[4]:.3g}"),
        Check(3, "kinetic(u*) <= kinetic(u) + 1e-6", kin_excess <= 1e-6, f"max kinetic(u*) - kinetic(u) = {kin_excess:.3g}"),
    ]


# -- 4. periodic waves ------------------------------------------------------------------------


def _sup_error(wave, exact: Callable, T: float) -> float:
    x = np.linspace(0.0, 2 * T, 2001)
    return float(np.max(np.abs(wave(x) - exact(x))))


def literal_sn_error(m: float = 0.5, lam: float = -1.0) -> tuple[float, str]:
    """Shooting wave against a*sn(bx; m) with a^2 = 2 m^2 b^2, lam = -(1+m^2) b^2, slope-matched."""
    b = math.sqrt(-lam / (1 + m * m))
    a = math.sqrt(2 * m * m * b * b)
    T = 2 * ellipk(m * m) / b
    try:
        wave = periodic_odd_solution(Fraction(2 * T).limit_denominator(10**12), 4, lam)
    except Exception as exc:  # the literal profile may not be reachable at all
        return math.inf, f"no wave with that period ({exc})"
    err = _sup_error(wave, lambda x: a * ellipj(b * x, m * m)[0], T)
    return err, f"literal T={T:.9g}, shooting slope {wave.s:.9g} vs a*b={a * b:.9g}"


def sd_form_error(m: float = 0.5, lam: float = -1.0) -> float:
    """Same comparison with the focusing profile (imaginary parameter, written via sd)."""
    n = m * m
    b = math.sqrt(-lam / (1 - n))
    a = math.sqrt(2 * n * b * b)
    T = 2 * ellipk(-n) / b
    wave = periodic_odd_solution(Fraction(2 * T).limit_denominator(10**12), 4, lam)
    mm = n / (1 + n)

    def exact(x):
        sn, _, dn, _ = ellipj(math.sqrt(1 + n) * b * x, mm)
        return a / math.sqrt(1 + n) * sn / dn

    return _sup_error(wave, exact, float(wave.L) / 2)


def period_exponent(p: float = 4.0, s1: float = 1.0, s2: float = 2.0) -> float:
    return math.log(half_period(s2, p, 0.0) / half_period(s1, p, 0.0)) / math.log(s2 / s1)


def criterion_4(audit: Audit | None = None) -> list[Check]:
    err, note = literal_sn_error()
    sd = sd_form_error()
    dT = abs(half_period(1e-4, 4, -1.0) - math.pi)
    slope = period_exponent()
    return [
        Check(4, "shooting vs sn closed form (a^2=2m^2b^2, lam=-(1+m^2)b^2), sup < 1e-6", err < 1e-6,
              f"sup error {err:.3g}; {note}"),
        Check(4, "shooting vs focusing cnoidal profile (sd form), sup < 1e-6", sd < 1e-6, f"sup error {sd:.3g}"),
        Check(4, "small-amplitude half-period -> pi within 1e-3", dT < 1e-3, f"|T(1e-4) - pi| = {dT:.3g}"),
        Check(4, "lam=0 period-scaling exponent -1/3 within 0.01", abs(slope + 1 / 3) < 0.01,
              f"measured d log T / d log s = {slope:.6f}"),
        Check(4, "lam=0 period-scaling exponent -(p-2)/p = -1/2 within 0.01", abs(slope + 0.5) < 0.01,
              f"measured {slope:.6f}"),
    ]


# -- 5. cycle witness -------------------------------------------------------------------------

CYCLE_STEPS = (1e-2, 5e-3, 2.5e-3)


def criterion_5(audit: Audit | None = None) -> list[Check]:
    g = named_graph("tadpole", loop=2)
    res = [cycle_compact_state(g, 4, -1.0, h=h) for h in CYCLE_STEPS]
    stat = np.array([r.stationary_residual for r in res])
    order = float(np.polyfit(np.log(CYCLE_STEPS), np.log(stat), 1)[0])
    kirch = max(r.kirchhoff_estimate for r in res)
    off = max(float(np.max(np.abs(r.field.edge_values(e.id)[1]))) for r in res for e in g.halflines)
    fine = res[-1]
    n = newton_bound_state(fine.field, 4, lam=-1.0)
    drift = abs(fld.lagrange_multiplier(n.field, 4) + 1.0)
    nm = newton_bound_state(fine.field, 4, mu=fine.mass, lam=-1.0)
    return [
        Check(5, "stationary residual order 2 +- 0.2", abs(order - 2) <= 0.2,
              f"residuals {', '.join(f'{s:.3g}' for s in stat)}; fitted order {order:.3f}"),
        Check(5, "Kirchhoff residual < 1e-8", kirch < 1e-8, f"max {kirch:.3g}"),
        Check(5, "exact zeros off the cycle", off == 0.0, f"max |u| on half-line = {off!r}"),
        Check(5, "Newton fixed point: <= 3 iterations, lambda drift < 1e-8",
              n.converged and n.iterations <= 3 and drift < 1e-8,
              f"converged={n.converged}, iterations={n.iterations}, drift={drift:.3g} "
              f"(fixed-mass solve: iterations={nm.iterations}, lambda shift {abs(nm.lam + 1):.3g})"),
    ]


# -- 6. small-mass scan ---------------------------------------------------------------------------

SCAN_MASSES = (0.05, 0.1, 0.2, 0.24)


def criterion_6(audit: Audit | None = None, starts: int = 50, seed: int = 7) -> list[Check]:
    g = named_graph("segment_halfline")
    ell = float(core_length(g))
    opts = SolverOptions(tol=1e-9, seed=seed)
    rows = nonexistence_scan(g, 4, [m / ell for m in SCAN_MASSES], opts, n_starts=starts, raise_on_violation=False)
    big = nonexistence_scan(g, 4, [10 / ell], opts, n_starts=starts, raise_on_violation=False)
    if audit is not None:
        for r in rows + big:
            audit.add(r.states, ell)
    counts = [len(r.states) for r in rows]
    good = [s for s in big[0].states if s.lam > 0 and s.energy < 0]
    best = min(good, key=lambda s: s.energy) if good else None
    violations = [v for r in rows + big for v in r.violations]
    return [
        Check(6, f"no states for l*mu in {SCAN_MASSES} ({starts} starts each)", not any(counts),
              f"states found {counts}"),
        Check(6, "l*mu = 10: a state with lambda > 0 and E < 0", best is not None,
              f"{len(big[0].states)} states" + (f"; lambda={best.lam:.6g}, E={best.energy:.6g}" if best else "")),
        Check(6, "scan reports no consistency violation", not violations, "; ".join(violations) or "none"),
    ]


# -- 7. nonpositive-multiplier probes --------------------------------------------------------------


def criterion_7(audit: Audit | None = None, starts: int = 20, seed: int = 11) -> list[Check]:
    out = []
    for name in ("segment_halfline", "segment_star"):
        g = named_graph(name)
        found = {}
        for p in (3.0, 4.0, 5.0):
            for mu in (0.1, 1.0, 10.0):
                states = multi_start_search(g, p, mu, starts, SolverOptions(seed=seed), exact_tail=False)
                found[(p, mu)] = sum(s.lam <= 0 for s in states)
        bad = {k: v for k, v in found.items() if v}
        out.append(Check(7, f"{name}: lambda <= 0 probes empty for p in 3,4,5 and mu in 0.1,1,10",
                         not bad, f"nonempty cells {bad}" if bad else f"0 states in {len(found)} cells"))
    geo = pendant_geometry(4, -1.0)
    g = named_graph("two_pendant", pendant=geo.xbar)
    c = pendant_compact_state(g, 4, -1.0, h=2e-3)
    states = multi_start_search(g, 4, c.mass, 10, SolverOptions(seed=seed), exact_tail=False, seeds=[c.field])
    ref = c.field.samples
    match = [s for s in states if s.lam < 0 and s.support == Support.ON_K
             and s.field.mesh is c.field.mesh
             and float(np.max(np.abs(np.abs(s.field.samples) - np.abs(ref)))) < 1e-3 * float(np.max(np.abs(ref)))]
    out.append(Check(7, "two-pendant: lambda < 0 compact state recovered", bool(match),
                     f"{len(states)} states; recovered lambda={match[0].lam:.9g}, support={match[0].support.value}"
                     if match else f"{len(states)} states, none matching the construction"))
    return out


# -- 8. scaling -------------------------------------------------------------------------------------


def criterion_8(audit: Audit | None = None) -> list[Check]:
    worst = 0.0
    for k, name in enumerate(("tadpole", "segment_halfline", "double_bridge")):
        g = named_graph(name)
        mesh = Mesh(g, GridSpec.build(g, 0.02, R=10.0), TRUNCATED)
        u = fld.random_field(mesh, seed=[8, k])
        for p in (3.0, 4.0, 5.0):
            m0 = scale_invariant_mass(float(core_length(g)), fld.mass(u), p)
            for theta in (0.1, 1.0, 10.0):
                g2, u2 = scaling_map(u, theta, p)
                m1 = scale_invariant_mass(float(core_length(g2)), fld.mass(u2), p)
                worst = max(worst, abs(m1 / m0 - 1))
    c = cycle_compact_state(named_graph("tadpole", loop=2), 4, -1.0, h=1e-2)
    r0 = c.stationary_residual
    ratios = []
    for theta in (0.1, 10.0):
        _, u2 = scaling_map(c.field, theta, 4)
        r1 = fld.max_stationary_residual(u2, scaled_multiplier(-1.0, theta, 4), 4)
        ratios.append(r1 / (theta ** 3 * r0))
    ok = all(0.25 <= q <= 4 for q in ratios)
    return [
        Check(8, "m* invariant under scaling_map (theta 0.1,1,10; p 3,4,5)", worst <= 1e-12, f"max rel change {worst:.3g}"),
        Check(8, "p=4 residual scales as theta^3 with lambda' = theta^2 lambda", ok,
              f"measured/predicted ratios {', '.join(f'{q:.6g}' for q in ratios)}"),
    ]


# -- 9. double bridge ---------------------------------------------------------------------------------

BRIDGE_MASSES = (0.5, 1.0, 2.0)


def criterion_9(audit: Audit | None = None, starts: int = 50, seed: int = 9) -> list[Check]:
    out = []
    for mu in BRIDGE_MASSES:
        d = double_bridge_state(1, 1, 4, mu)
        r = d.result
        kirch = max(r.kirchhoff_residual, r.kirchhoff_estimate)
        ok = r.converged and d.min_value > 0 and d.symmetry_defect < 1e-8 and kirch < 1e-6
        out.append(Check(9, f"everywhere mode, mu={mu:g}: reflected state", ok,
                         f"converged={r.converged}, min u={d.min_value:.3g}, symmetry defect={d.symmetry_defect:.3g}, "
                         f"Kirchhoff={kirch:.3g}, lambda={r.lam:.9g}"))
    g = named_graph("double_bridge")
    ell = float(core_length(g))
    mu = 0.1 / ell  # m* = 0.1 at p = 4
    states = multi_start_search(g, 4, mu, starts, SolverOptions(seed=seed))
    if audit is not None:
        audit.add(states, ell)
    on_g = [s for s in states if s.support == Support.ON_G]
    out.append(Check(9, f"localized mode, m*={scale_invariant_mass(ell, mu, 4):g}: no state supported on G ({starts} starts)",
                     not on_g, f"{len(states)} states, {len(on_g)} supported on G"))
    return out


# -- 10. kinetic-bound audit ----------------------------------------------------------------------------


def ground_state_samples(audit: Audit) -> None:
    """A few extra lambda >= 0 states for the audit."""
    for name, p, mu in (("segment_halfline", 3.0, 1.0), ("tadpole", 4.0, 2.0), ("segment_star", 5.0, 4.0)):
        g = named_graph(name)
        r = ground_state(g, p, mu, opts=SolverOptions(h=2e-2))
        if r.converged:
            audit.add([r], float(core_length(g)))


def criterion_10(audit: Audit) -> list[Check]:
    fails, low = [], []
    for s, ell in audit.states:
        chk = lemma31_check(s, s.p, ell)
        if not (chk.alt_ok and chk.bas_ok):
            fails.append(f"lambda={s.lam:.6g} mu={s.mass:.6g}: alt {chk.alt_ok}, bas {chk.bas_ok}")
        if s.p == 4 and ell * s.mass < 0.25:
            low.append(f"l*mu={ell * s.mass:.6g}")
    n4 = sum(s.p == 4 for s, _ in audit.states)
    return [
        Check(10, f"kinetic bounds hold for all {len(audit.states)} lambda >= 0 states", not fails,
              "; ".join(fails) or "all pass"),
        Check(10, f"p=4: l*mu >= 1/4 for all {n4} lambda >= 0 states", not low, ", ".join(low) or "all pass"),
    ]


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}

SUITES = {
    "thresholds": (1,),
    "gn": (2,),
    "rearrangement": (3,),
    "constructions": (4, 5),
    "scans": (6, 7, 10),
    "scaling": (8,),
    "bridge": (9, 10),
}


def run_suite(name: str, echo: Callable[[str], None] | None = print) -> list[Check]:
    if name not in SUITES:
        raise KeyError(name)
    audit = Audit()
    out: list[Check] = []
    for c in SUITES[name]:
        if c == 10:
            ground_state_samples(audit)
            checks = criterion_10(audit)
        else:
            checks = CRITERIA[c](audit)
        for chk in checks:
            if echo:
                echo(chk.line())
        out.extend(checks)
    return out
