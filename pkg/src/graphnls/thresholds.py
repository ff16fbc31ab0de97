"""Sharp half-line Gagliardo-Nirenberg constants, nonexistence thresholds, and
the regime classifier built on them."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources

from scipy.special import beta

from .errors import InvalidProblem, LambdaNegative, POutOfRange
from .graph import MetricGraph, core_length, is_tree, pendant_count

C_INF = math.sqrt(2.0)


@dataclass(frozen=True)
class GNConstants:
    p: float
    C_p: float
    C_inf: float = C_INF
    source: str = "golden"


def _sech_moment(b: float) -> float:
    """Integral of sech(x)^b over [0, inf)."""
    return 0.5 * beta(b / 2.0, 0.5)


def half_soliton_constant(p: float) -> float:
    """GN ratio of the half-soliton sech^{2/(p-2)}, which is the half-line maximizer."""
    if p == 2:
        return 1.0
    if math.isinf(p):
        return C_INF
    a = 2.0 / (p - 2.0)
    i_p = _sech_moment(a * p)
    m = _sech_moment(2 * a)
    t = a * a * (m - _sech_moment(2 * a + 2))
    return i_p / (m ** ((p + 2) / 4) * t ** ((p - 2) / 4))


@lru_cache(maxsize=1)
def _golden() -> dict[float, tuple[float, str]]:
    text = resources.files("graphnls").joinpath("data/gn_constants.csv").read_text()
    out = {}
    for row in csv.DictReader(text.splitlines()):
        out[float(row["p"])] = (float(row["C_p"]), row["oracle_version"])
    return out


@lru_cache(maxsize=256)
def sharp_gn_constants(p: float) -> GNConstants:
    """C_p for p in [2, inf]: golden value when tabulated, else the closed form."""
    p = float(p)
    if not p >= 2:
        raise POutOfRange(f"GN constants need p >= 2, got {p}")
    if math.isinf(p):
        return GNConstants(p, C_INF, source="exact")
    if p == 2:
        return GNConstants(p, 1.0, source="exact")
    if p in _golden():
        c, version = _golden()[p]
        return GNConstants(p, c, source=f"golden:{version}")
    return GNConstants(p, half_soliton_constant(p), source="beta")


def gn_constant(p: float) -> float:
    return sharp_gn_constants(p).C_p


def _check_critical_range(p: float) -> None:
    if not 4 <= p < 6:
        raise POutOfRange(f"threshold defined for p in [4, 6), got {p}")


def bound_state_threshold(p: float) -> float:
    """C* below which no bound state with lambda >= 0 exists."""
    _check_critical_range(p)
    # C_inf^{-p} written as a power of two keeps p = 4 exact
    return 2.0 ** (-p / 2.0) * gn_constant(p) ** ((4.0 - p) / (6.0 - p))


def ground_state_threshold(p: float) -> float:
    _check_critical_range(p)
    return (p / 2.0) ** (2.0 / (6.0 - p)) * bound_state_threshold(p)


def threshold_ratio(p: float) -> float:
    """C**/C*, from the exponent alone."""
    _check_critical_range(p)
    return (p / 2.0) ** (2.0 / (6.0 - p))


def scale_invariant_mass(ell: float, mu: float, p: float) -> float:
    if not 2 < p < 6:
        raise POutOfRange(f"p must lie in (2, 6), got {p}")
    if not (ell > 0 and mu > 0):
        raise InvalidProblem("core length and mass must be positive")
    return float(ell) * float(mu) ** ((p - 2.0) / (6.0 - p))


@dataclass(frozen=True)
class KineticBoundsResult:
    alt_ok: bool
    bas_ok: bool
    kinetic: float
    alt_bound: float
    bas_lhs: float
    bas_rhs: float

    @property
    def alt_margin(self) -> float:
        return self.alt_bound - self.kinetic

    @property
    def bas_margin(self) -> float:
        return self.bas_lhs - self.bas_rhs


def kinetic_bounds(kinetic: float, mu: float, ell: float, p: float, rtol: float = 1e-6) -> KineticBoundsResult:
    """Upper bound on the kinetic energy and the lower bound on its (p-4)/4 power.

    Both follow from GN plus ``kinetic <= potential`` and therefore hold for
    every bound state with a nonnegative multiplier; ``rtol`` absorbs
    discretization error.
    """
    if not 2 < p < 6:
        raise POutOfRange(f"p must lie in (2, 6), got {p}")
    alt = gn_constant(p) ** (4.0 / (6.0 - p)) * mu ** ((p + 2.0) / (6.0 - p))
    lhs = kinetic ** ((p - 4.0) / 4.0)
    rhs = C_INF ** (-p) / ell * mu ** (-p / 4.0)
    return KineticBoundsResult(kinetic <= alt * (1 + rtol), lhs >= rhs * (1 - rtol), kinetic, alt, lhs, rhs)


def lemma31_check(state, p: float, ell: float | None = None, rtol: float = 1e-6) -> KineticBoundsResult:
    """Audit a solver result against the two kinetic bounds."""
    if state.lam < 0:
        raise LambdaNegative(f"bounds assume lambda >= 0, got {state.lam}")
    if not state.converged:
        raise InvalidProblem("bounds are only meaningful for converged states")
    if ell is None:
        ell = float(core_length(state.field.graph))
    return kinetic_bounds(state.kinetic, state.mass, ell, p, rtol)


@dataclass
class RegimeReport:
    p: float
    mu: float
    ell: float
    m_star: float
    C_star: float | None
    C_dblstar: float | None
    tree: bool
    pendants: int
    no_bound_lambda_nonneg: bool
    no_lambda_nonpos: bool
    no_bound_any: bool
    no_ground: bool
    existence: list[str] = field(default_factory=list)
    reasons: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def classify_regime(g: MetricGraph, p: float, mu: float) -> RegimeReport:
    if not g.is_noncompact:
        raise InvalidProblem("graph has no half-line")
    if not g.bounded_edges:
        raise InvalidProblem("graph has an empty compact core")
    if not 2 < p < 6:
        raise InvalidProblem(f"p must lie in (2, 6), got {p}")
    if not mu > 0:
        raise InvalidProblem("mass must be positive")
    ell = float(core_length(g))
    m = scale_invariant_mass(ell, mu, p)
    critical = 4 <= p < 6
    c1 = bound_state_threshold(p) if critical else None
    c2 = ground_state_threshold(p) if critical else None
    tree, pend = is_tree(g), pendant_count(g)
    nb_pos = critical and m < c1
    nb_neg = tree and pend <= 1
    reasons = {}
    if nb_pos:
        reasons["no_bound_lambda_nonneg"] = "m* below the GN bound-state threshold C*"
    if nb_neg:
        reasons["no_lambda_nonpos"] = "tree with at most one pendant: lambda <= 0 states must vanish"
    if nb_pos and nb_neg:
        reasons["no_bound_any"] = "both exclusions apply"
    no_ground = critical and m < c2
    if no_ground:
        reasons["no_ground"] = "m* below the ground-state threshold C**"
    notes = []
    if p < 4:
        notes.append("subcritical p < 4: a ground state exists for every mass")
    notes.append("many bound states exist for large mass (cutoff not decided by thresholds)")
    if critical:
        notes.append("ground state exists for large mass (cutoff not decided by thresholds)")
        notes.append("no ground state for small mass")
    return RegimeReport(p, mu, ell, m, c1, c2, tree, pend, nb_pos, nb_neg,
                        nb_pos and nb_neg, no_ground, notes, reasons)
