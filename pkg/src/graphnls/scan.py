"""Mass scans pairing the regime verdicts with multi-start searches."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .errors import ConsistencyViolation, InputError
from .field import LOCALIZED, GraphField, Support
from .graph import MetricGraph
from .solver import BoundStateResult, SolverOptions, _threads, multi_start_search
from .thresholds import RegimeReport, classify_regime, lemma31_check

COLUMNS = ("mu", "m_star", "C_star", "C_dblstar", "no_bound_lnn", "no_lambda_nonpos",
           "no_bound_any", "no_ground", "n_states", "min_lambda", "min_energy", "supports")


@dataclass
class ScanRow:
    mu: float
    report: RegimeReport
    states: list[BoundStateResult]
    violations: list[str] = field(default_factory=list)

    def as_record(self) -> dict:
        r = self.report
        counts = Counter(s.support.value for s in self.states)
        return {
            "mu": self.mu,
            "m_star": r.m_star,
            "C_star": r.C_star,
            "C_dblstar": r.C_dblstar,
            "no_bound_lnn": r.no_bound_lambda_nonneg,
            "no_lambda_nonpos": r.no_lambda_nonpos,
            "no_bound_any": r.no_bound_any,
            "no_ground": r.no_ground,
            "n_states": len(self.states),
            "min_lambda": min((s.lam for s in self.states), default=None),
            "min_energy": min((s.energy for s in self.states), default=None),
            "supports": ";".join(f"{k}:{counts[k]}" for k in sorted(counts)),
        }


def mu_grid(spec: str, geometric: bool = False) -> list[float]:
    """Parse ``start:stop:count`` (inclusive) or a single value."""
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InputError(f"bad mass grid {spec!r}; expected start:stop:count") from None
    if n < 1 or not (a > 0 and b > 0):
        raise InputError("mass grid needs positive endpoints and count >= 1")
    if n == 1:
        return [a]
    if geometric:
        la, lb = math.log(a), math.log(b)
        return [math.exp(la + (lb - la) * i / (n - 1)) for i in range(n)]
    return [a + (b - a) * i / (n - 1) for i in range(n)]


def check_consistency(report: RegimeReport, states: Sequence[BoundStateResult],
                      nonlinearity: str = LOCALIZED) -> list[str]:
    """Verdicts contradicted by the states found; empty when everything agrees."""
    out = []
    p, ell = report.p, report.ell
    for s in states:
        tag = f"state lambda={s.lam:.6g} support={s.support.value}"
        if s.lam <= 0 and report.no_lambda_nonpos:
            out.append(f"{tag}: lambda <= 0 state on a tree with at most one pendant")
        if nonlinearity != LOCALIZED:
            continue
        if report.no_bound_any:
            out.append(f"{tag}: state found where none may exist")
        if s.lam >= 0 and report.no_bound_lambda_nonneg:
            out.append(f"{tag}: lambda >= 0 state below C*")
        if s.support == Support.ON_G and report.C_star is not None and report.m_star < report.C_star:
            out.append(f"{tag}: state supported on G below C*")
        if s.lam >= 0:
            chk = lemma31_check(s, p, ell)
            if not chk.alt_ok:
                out.append(f"{tag}: kinetic {chk.kinetic:.6g} above GN bound {chk.alt_bound:.6g}")
            if not chk.bas_ok:
                out.append(f"{tag}: lower kinetic bound fails ({chk.bas_lhs:.6g} < {chk.bas_rhs:.6g})")
            if p == 4 and ell * s.mass < 0.25 * (1 - 1e-6):
                out.append(f"{tag}: lambda >= 0 state with l*mu = {ell * s.mass:.6g} < 1/4")
    return out


def nonexistence_scan(g: MetricGraph, p: float, mus: Sequence[float], opts: SolverOptions | None = None,
                      nonlinearity: str = LOCALIZED, n_starts: int | None = None,
                      seeds: Callable[[float], Sequence[GraphField]] | None = None,
                      raise_on_violation: bool = True) -> list[ScanRow]:
    """Classify and search at every mass in ``mus``; rows come back in grid order.

    ``seeds(mu)`` may supply extra initial fields for a given mass.
    """
    if not len(mus):
        raise InputError("empty mass grid")
    opts = opts or SolverOptions()
    starts = n_starts if n_starts is not None else max(opts.starts, 1)

    def one(mu: float) -> ScanRow:
        report = classify_regime(g, p, mu)
        extra = list(seeds(mu)) if seeds else []
        # inner searches stay serial; the scan parallelizes across masses
        inner = replace(opts, threads=1)
        states = multi_start_search(g, p, mu, starts, inner, nonlinearity, seeds=extra)
        return ScanRow(float(mu), report, states, check_consistency(report, states, nonlinearity))

    n = min(_threads(opts), len(mus))
    if n > 1:
        with ThreadPoolExecutor(n) as ex:
            rows = list(ex.map(one, mus))
    else:
        rows = [one(mu) for mu in mus]
    bad = [f"mu={r.mu:.12g}: {v}" for r in rows for v in r.violations]
    if bad and raise_on_violation:
        raise ConsistencyViolation("; ".join(bad), rows)
    return rows
