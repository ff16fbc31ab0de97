"""Odd periodic solutions of phi'' + |phi|^{p-2} phi = lam * phi by shooting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import BisectionFailure, InputError, NoReturn

RTOL = 1e-12
ATOL = 1e-14


def _rhs(p, lam):
    def f(t, y):
        phi = y[0]
        return [y[1], lam * phi - abs(phi) ** (p - 2) * phi]

    return f


def _turning_point(_t, y):
    return y[1]


_turning_point.terminal = True
_turning_point.direction = -1


def _shoot(s: float, p: float, lam: float, horizon: float | None = None, dense: bool = False):
    """Integrate from (0, s) up to the first maximum of phi."""
    if not s > 0:
        raise InputError(f"initial slope must be positive, got {s}")
    if horizon is None:
        # generous multiple of the linear period, or of the amplitude time scale
        amp = s if lam >= 0 else s / math.sqrt(-lam)
        horizon = 50.0 * (math.pi / math.sqrt(abs(lam)) if lam else 1.0) + 50.0 / max(amp, 1e-12) ** ((p - 2) / p)
        if lam > 0:
            horizon += 50.0 * (1.0 + abs(math.log(s))) / math.sqrt(lam)
    sol = solve_ivp(_rhs(p, lam), (0.0, horizon), [0.0, s], method="DOP853", rtol=RTOL, atol=ATOL,
                    events=_turning_point, dense_output=dense)
    if not len(sol.t_events[0]):
        raise NoReturn(f"no turning point before x = {horizon:.6g} (s={s!r}, p={p}, lambda={lam})")
    return sol


def half_period(s: float, p: float, lam: float, horizon: float | None = None) -> float:
    """Distance from 0 to the next zero of the solution with phi(0)=0, phi'(0)=s.

    The potential is even, so the orbit is symmetric about its turning point
    and the half-period is twice the time to the first maximum.
    """
    return 2.0 * float(_shoot(s, p, lam, horizon).t_events[0][0])


def min_repetitions(L: float, lam: float) -> int:
    """Smallest k with L/(2k) below the small-amplitude half-period."""
    if lam >= 0:
        return 1
    return math.floor(L * math.sqrt(-lam) / (2.0 * math.pi)) + 1


@dataclass(frozen=True, eq=False)
class PeriodicWave:
    """Odd wave with minimal period ``L_min = L/k``; evaluated through its symmetries."""

    p: float
    lam: float
    L: Fraction
    k: int
    s: float
    _sol: object = field(repr=False)
    _xbar: float = field(repr=False)

    @property
    def L_min(self) -> Fraction:
        return self.L / self.k

    @property
    def half_period(self) -> float:
        return 2.0 * self._xbar

    @property
    def xbar(self) -> float:
        """First critical point after 0 (the quarter period)."""
        return self._xbar

    @property
    def amplitude(self) -> float:
        return float(self._sol.sol(self._xbar)[0])

    def _reduce(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Map positions into [0, xbar] with the sign flips for phi and phi'."""
        if isinstance(x, (Fraction, int)) or (isinstance(x, (list, tuple)) and x and isinstance(x[0], (Fraction, int))):
            xs = [x] if not isinstance(x, (list, tuple)) else list(x)
            Lm = self.L_min
            r = np.array([float(Fraction(v) % Lm) for v in xs])
            exact_zero = np.array([Fraction(v) % (Lm / 2) == 0 for v in xs])
        else:
            Lm = float(self.L_min)
            r = np.mod(np.asarray(x, dtype=float), Lm)
            exact_zero = np.zeros(r.shape, dtype=bool)
        T = float(self.L_min) / 2.0
        sign_u = np.ones_like(r)
        sign_d = np.ones_like(r)
        upper = r >= T
        r = np.where(upper, r - T, r)
        sign_u[upper] = -1.0
        sign_d[upper] = -1.0
        back = r > self._xbar
        r = np.where(back, np.maximum(T - r, 0.0), r)
        sign_d[back] *= -1.0
        return np.clip(r, 0.0, self._xbar), np.where(exact_zero, 0.0, sign_u), sign_d

    def __call__(self, x):
        r, su, _ = self._reduce(x)
        return su * self._sol.sol(r)[0]

    def derivative(self, x):
        r, _, sd = self._reduce(x)
        return sd * self._sol.sol(r)[1]

    def second_derivative(self, x):
        phi = self(x)
        return self.lam * phi - np.abs(phi) ** (self.p - 2) * phi

    def table(self, n: int = 400, periods: int = 1) -> np.ndarray:
        """Columns x, phi, dphi over ``periods`` minimal periods."""
        x = np.linspace(0.0, periods * float(self.L_min), n * periods + 1)
        return np.column_stack([x, self(x), self.derivative(x)])

    def mass(self, length=None) -> float:
        """Integral of phi^2 over [0, length] (default L), from the quarter-period integral."""
        from scipy.integrate import quad

        length = self.L if length is None else Fraction(length)
        quarters = length / (self.L_min / 4)
        if quarters.denominator != 1:
            raise InputError("mass() needs a multiple of the quarter period")
        q = quad(lambda t: self._sol.sol(t)[0] ** 2, 0.0, self._xbar, epsabs=0, epsrel=1e-13, limit=200)[0]
        return float(quarters) * q


def _target_slope(target: float, p: float, lam: float) -> float:
    """Solve half_period(s) = target on the decreasing branch, bracketing in log s."""

    def g(logs):
        return half_period(math.exp(logs), p, lam) - target

    lo, hi = 0.0, 0.0
    g_lo = g(lo)
    steps = 0
    if g_lo < 0:
        while g_lo < 0:
            hi, lo = lo, lo - 1.0
            g_lo = g(lo)
            steps += 1
            if steps > 60:
                raise BisectionFailure(f"no slope with half-period {target}: T(s) stays below it down to s={math.exp(lo):.3g}")
        g_hi = g(hi)
    else:
        hi, g_hi = lo, g_lo
        while g_hi > 0:
            lo, hi = hi, hi + 1.0
            g_hi = g(hi)
            steps += 1
            if steps > 60:
                raise BisectionFailure(f"no slope with half-period {target}: T(s) stays above it up to s={math.exp(hi):.3g}")
    if not (g(lo) > 0 > g_hi):
        raise BisectionFailure(f"bracket [{math.exp(lo):.6g}, {math.exp(hi):.6g}] not monotone for target {target}")
    return math.exp(brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200))


def periodic_odd_solution(L, p: float, lam: float, k: int | None = None) -> PeriodicWave:
    """Odd L-periodic solution, with the smallest feasible repetition count k."""
    L = Fraction(L) if not isinstance(L, float) else Fraction(L).limit_denominator(10**12)
    if not L > 0:
        raise InputError("period must be positive")
    if not 2 < p:
        raise InputError(f"p must exceed 2, got {p}")
    return _cached_wave(L, float(p), float(lam), k or min_repetitions(float(L), lam))


@lru_cache(maxsize=64)
def _cached_wave(L: Fraction, p: float, lam: float, k: int) -> PeriodicWave:
    T = float(L) / (2 * k)
    if lam < 0 and T >= math.pi / math.sqrt(-lam):
        raise BisectionFailure(f"half-period {T} exceeds the small-amplitude limit {math.pi / math.sqrt(-lam)}")
    s = _target_slope(T, p, lam)
    sol = _shoot(s, p, lam, dense=True)
    xbar = float(sol.t_events[0][0])
    return PeriodicWave(p, lam, L, k, s, sol, xbar)
