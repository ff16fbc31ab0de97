"""Ground states, bound states and the graph/mass scaling map.

All solvers work on the discrete energy

    E_h(u) = 1/2 u^T K u + (tails) - 1/p sum_i W^kappa_i |u_i|^p

whose Euler-Lagrange equations are the three-point scheme on edges and a
finite-volume Kirchhoff balance at vertices.  ``lambda(u) = (P - T)/mu`` is
then exact at discrete critical points, which is what makes the solver's
multiplier and the functional one agree to rounding.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import field as fld
from .errors import (InputError, NegativeLambdaRequested, NonConvergence, POutOfRange,
                     SingularJacobian)
from .field import (EVERYWHERE, EXACT_TAIL, LOCALIZED, TRUNCATED, GraphField, GridSpec, Mesh,
                    Support)
from .graph import MetricGraph


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-9
    newton_max_iter: int = 60
    flow_max_iter: int = 4000
    flow_tol: float = 1e-7
    step: float = 1.0
    armijo: float = 1e-4
    min_damping: float = 2.0 ** -12
    seed: int = 0
    starts: int = 1
    h: float = 1e-2
    R: float | None = None
    h_R: float | None = None
    escape_fraction: float = 0.05
    threads: int | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("tolerance must be positive")
        if self.newton_max_iter < 1 or self.flow_max_iter < 1:
            raise InputError("iteration caps must be positive")


@dataclass
class BoundStateResult:
    field: GraphField
    p: float
    lam: float
    mass: float
    energy: float
    kinetic: float
    potential: float
    stationary_residual: float
    kirchhoff_residual: float
    kirchhoff_estimate: float
    support: Support
    converged: bool
    iterations: int
    method: str
    message: str = ""
    history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "p": self.p, "lambda": self.lam, "mass": self.mass, "energy": self.energy,
            "kinetic": self.kinetic, "potential": self.potential,
            "stationary_residual": self.stationary_residual,
            "kirchhoff_residual": self.kirchhoff_residual,
            "kirchhoff_estimate": self.kirchhoff_estimate,
            "support": self.support.value, "converged": self.converged,
            "iterations": self.iterations, "method": self.method, "message": self.message,
            "nonlinearity": self.field.nonlinearity, "halfline_mode": self.field.halfline_mode,
            "tail_rate": self.field.tail_rate,
        }


def _check_p(p: float) -> None:
    if not 2 < p < 6:
        raise POutOfRange(f"p must lie in (2, 6), got {p}")


# -- discrete system ------------------------------------------------------------


class _System:
    """Residual and Jacobian of the discrete stationary equations on one mesh."""

    def __init__(self, mesh: Mesh, p: float, nonlinearity: str):
        self.mesh = mesh
        self.p = p
        self.nonlinearity = nonlinearity
        self.K = mesh.stiffness
        self.W = mesh.mass_diag
        self.Wk = mesh.weight_diag(nonlinearity)
        self.T = np.bincount(mesh.tail_dofs, minlength=mesh.ndof).astype(float)
        nv = len(mesh.graph.vertices)
        self.vertex = np.zeros(mesh.ndof, dtype=bool)
        self.vertex[:nv] = True
        self.exact = bool(mesh.tails)

    def rate(self, lam: float) -> float:
        return math.sqrt(lam) if self.exact else 0.0

    def F(self, u: np.ndarray, lam: float) -> np.ndarray:
        return (self.K @ u + (self.rate(lam) * self.T + lam * self.W) * u
                - self.Wk * np.abs(u) ** (self.p - 2) * u)

    def mass(self, u: np.ndarray, lam: float) -> float:
        m = float(np.dot(self.W, u * u))
        if self.exact:
            m += float(np.dot(self.T, u * u)) / (2.0 * math.sqrt(lam))
        return m

    def jacobian(self, u: np.ndarray, lam: float) -> sp.csr_matrix:
        d = self.rate(lam) * self.T + lam * self.W - (self.p - 1) * self.Wk * np.abs(u) ** (self.p - 2)
        return (self.K + sp.diags(d)).tocsc()

    def dF_dlam(self, u: np.ndarray, lam: float) -> np.ndarray:
        g = self.W * u
        if self.exact:
            g = g + self.T * u / (2.0 * math.sqrt(lam))
        return g

    def dM_du(self, u: np.ndarray, lam: float) -> np.ndarray:
        g = 2.0 * self.W * u
        if self.exact:
            g = g + self.T * u / math.sqrt(lam)
        return g

    def dM_dlam(self, u: np.ndarray, lam: float) -> float:
        if not self.exact:
            return 0.0
        return -float(np.dot(self.T, u * u)) / (4.0 * lam ** 1.5)

    def residual_norms(self, F: np.ndarray) -> tuple[float, float]:
        """(max pointwise interior residual in strong form, max vertex balance)."""
        inner = ~self.vertex
        stat = float(np.max(np.abs(F[inner] / self.W[inner]), initial=0.0))
        kirch = float(np.max(np.abs(F[self.vertex]), initial=0.0))
        return stat, kirch


def _result(u: GraphField, p: float, lam: float, stat: float, kirch: float, converged: bool,
            iterations: int, method: str, message: str = "", history=None,
            support: Support | None = None) -> BoundStateResult:
    f = fld.functionals(u, p)
    _, kest = fld.kirchhoff_residual(u)
    return BoundStateResult(u, p, float(lam), f.mass, f.energy, f.kinetic, f.potential, stat, kirch,
                            kest, support or fld.support_classification(u), converged, iterations,
                            method, message, list(history or []))


def _solve_bordered(J, b_col, c_row, d, rhs_u, rhs_m):
    """Solve [[J, b], [c^T, d]] [x; y] = [rhs_u; rhs_m] by block elimination.

    Factoring the bordered matrix directly lets the dense row fill in; the
    Jacobian itself is banded per edge.  A singular J (fold points) falls back
    to the bordered factorization.
    """
    try:
        lu = _factor(J)
        x1 = lu.solve(rhs_u)
        x2 = lu.solve(b_col)
        s = d - float(np.dot(c_row, x2))
        if s != 0 and np.all(np.isfinite(x1)) and np.all(np.isfinite(x2)):
            y = (rhs_m - float(np.dot(c_row, x1))) / s
            x = x1 - y * x2
            if np.all(np.isfinite(x)):
                return x, y
    except SingularJacobian:
        pass
    n = J.shape[0]
    A = sp.bmat([[J, sp.csc_matrix(b_col.reshape(-1, 1))],
                 [sp.csc_matrix(c_row.reshape(1, -1)), sp.csc_matrix([[d]])]], format="csc")
    x = _lu_solve(A, np.concatenate([rhs_u, [rhs_m]]), permc_spec="MMD_AT_PLUS_A")
    return x[:n], float(x[n])


def _factor(A, permc_spec="COLAMD"):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            return spla.splu(A.tocsc(), permc_spec=permc_spec)
    except (RuntimeError, spla.MatrixRankWarning) as exc:
        raise SingularJacobian(f"Newton matrix is singular: {exc}") from None


def _lu_solve(A, b, permc_spec="COLAMD"):
    lu = _factor(A, permc_spec)
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        cond = _condition_estimate(A, lu)
        raise SingularJacobian("Newton step is not finite", cond)
    return x


def _condition_estimate(A, lu) -> float:
    try:
        inv = spla.LinearOperator(A.shape, matvec=lu.solve, rmatvec=lambda y: lu.solve(y, trans="T"))
        return float(spla.onenormest(A) * spla.onenormest(inv))
    except Exception:
        return math.inf


def newton_bound_state(init: GraphField, p: float, *, mu: float | None = None, lam: float | None = None,
                       opts: SolverOptions | None = None, raise_on_failure: bool = False) -> BoundStateResult:
    """Damped Newton for the discrete bound-state equations.

    lambda-mode (``lam`` given, ``mu`` None): unknowns are the samples.
    mu-mode (``mu`` given): lambda joins the unknowns and the mass equation is
    appended; ``lam`` is then the starting multiplier (default: lambda(init)).
    ExactTail meshes need lambda > 0 throughout.
    """
    _check_p(p)
    opts = opts or SolverOptions()
    mesh = init.mesh
    if (mu is None) == (lam is None) and mu is None:
        raise InputError("give mu (mass-constrained) or lam (fixed multiplier)")
    sysm = _System(mesh, p, init.nonlinearity)
    u = np.array(init.dofs, dtype=float)
    mu_mode = mu is not None
    if lam is None:
        lam = init.tail_rate ** 2 if sysm.exact else fld.lagrange_multiplier(init, p)
    lam = float(lam)
    if sysm.exact and lam <= 0:
        raise NegativeLambdaRequested(f"exponential tails need lambda > 0, got {lam}")

    def residual(u, lam):
        F = sysm.F(u, lam)
        G = sysm.mass(u, lam) - mu if mu_mode else 0.0
        return F, G

    def merit(F, G):
        return math.sqrt(float(np.dot(F, F)) + G * G)

    def make_field(u, lam):
        return GraphField(mesh, u, init.nonlinearity, math.sqrt(lam) if sysm.exact else init.tail_rate)

    F, G = residual(u, lam)
    history = [merit(F, G)]
    it = 0
    message = ""
    converged = False
    while True:
        stat, kirch = sysm.residual_norms(F)
        if stat < opts.tol and kirch < opts.tol and abs(G) < opts.tol:
            converged = True
            break
        if it >= opts.newton_max_iter:
            message = f"no convergence in {it} Newton steps (residual {history[-1]:.3g})"
            break
        J = sysm.jacobian(u, lam)
        try:
            if mu_mode:
                du, dlam = _solve_bordered(J, sysm.dF_dlam(u, lam), sysm.dM_du(u, lam),
                                           sysm.dM_dlam(u, lam), -F, -G)
            else:
                du, dlam = _lu_solve(J, -F), 0.0
        except SingularJacobian as exc:
            exc.result = _result(make_field(u, lam), p, lam, stat, kirch, False, it, "newton", str(exc), history)
            if raise_on_failure:
                raise
            return exc.result
        t = 1.0
        m0 = history[-1]
        while True:
            lam_t = lam + t * dlam
            if not (sysm.exact and lam_t <= 0):
                u_t = u + t * du
                F_t, G_t = residual(u_t, lam_t)
                m_t = merit(F_t, G_t)
                if np.isfinite(m_t) and (m_t <= (1 - opts.armijo * t) * m0 or t == 1.0 and m_t < m0):
                    break
            t *= 0.5
            if t < opts.min_damping:
                break
        if t < opts.min_damping:
            message = f"line search stalled after {it} Newton steps (residual {m0:.3g})"
            break
        u, lam, F, G = u_t, lam_t, F_t, G_t
        history.append(m_t)
        it += 1
    res = _result(make_field(u, lam), p, lam, stat, kirch, converged, it, "newton", message, history)
    if not converged and raise_on_failure:
        raise NonConvergence(message, res)
    return res


# -- ground states -----------------------------------------------------------------


def ground_grid(g: MetricGraph, opts: SolverOptions, lam_est: float | None = None) -> GridSpec:
    R = opts.R if opts.R is not None else fld.default_truncation(lam_est)
    return GridSpec.build(g, opts.h, R=R, h_R=opts.h_R or max(opts.h, 0.05))


def _bump(mesh: Mesh) -> np.ndarray:
    """Positive profile: 1 on the core, exponentially damped on half-lines."""
    u = np.zeros(mesh.ndof)
    s = np.zeros(mesh.nsamples)
    for e in mesh.graph.edges:
        if e.id not in mesh.slices:
            continue
        x = mesh.edge_x[e.id]
        sl = mesh.slices[e.id]
        if e.bounded:
            s[sl] = 1.0
        else:
            s[sl] = np.exp(-x) * (1.0 - x / x[-1]) if mesh.graph.bounded_edges else np.exp(-x / 4) * (1.0 - x / x[-1])
    ok = mesh.valid
    u[mesh.sample_dof[ok]] = s[ok]
    return u


def ground_state(g: MetricGraph, p: float, mu: float, grid: GridSpec | None = None,
                 nonlinearity: str = LOCALIZED, opts: SolverOptions | None = None,
                 init: np.ndarray | None = None, polish: bool = True) -> BoundStateResult:
    """Energy minimizer at mass ``mu`` by preconditioned projected gradient descent.

    Each step moves along the Sobolev gradient ``(K + sigma W)^{-1} grad E``
    projected tangent to the mass sphere, renormalizes to mass ``mu`` and is
    accepted by an Armijo test, so the energy history is nonincreasing.  A
    Newton polish (mass-constrained) finishes when the flow has settled.
    Mass drifting to the far half of the truncated half-lines is reported as
    escape (``converged=False``, support ``ZERO``).
    """
    _check_p(p)
    if not mu > 0:
        raise InputError("mass must be positive")
    opts = opts or SolverOptions()
    grid = grid or ground_grid(g, opts)
    mesh = Mesh(g, grid, TRUNCATED)
    sysm = _System(mesh, p, nonlinearity)
    W, K, Wk = sysm.W, sysm.K, sysm.Wk
    far = np.zeros(mesh.ndof, dtype=bool)
    for e in g.halflines:
        d = mesh.sample_dof[mesh.slices[e.id]]
        far[d[len(d) // 2:][d[len(d) // 2:] >= 0]] = True

    def energy(u):
        return 0.5 * float(u @ (K @ u)) - float(np.dot(Wk, np.abs(u) ** p)) / p

    def normalize(u):
        return u * math.sqrt(mu / float(np.dot(W, u * u)))

    u = normalize(np.array(init, dtype=float) if init is not None else _bump(mesh))
    E = energy(u)
    history = [E]
    sigma = None
    solve = None
    tau = opts.step
    message = ""
    escaped = False
    settled = False
    stall = 0
    it = 0
    for it in range(1, opts.flow_max_iter + 1):
        grad = K @ u - Wk * np.abs(u) ** (p - 2) * u
        Wu = W * u
        lam = -float(np.dot(grad, u)) / mu
        r = grad + lam * Wu
        if float(np.max(np.abs(r / W))) < opts.flow_tol:
            settled = True
            break
        s_new = max(abs(lam), 0.1)
        if solve is None or not 0.7 < s_new / sigma < 1.4:
            sigma = s_new
            solve = spla.factorized((K + sp.diags(sigma * W)).tocsc())
        g_pre = solve(grad)
        m_pre = solve(Wu)
        d = g_pre - (np.dot(Wu, g_pre) / np.dot(Wu, m_pre)) * m_pre
        slope = float(np.dot(grad, d))
        if slope <= 0:
            settled = True
            break
        while True:
            u_t = normalize(u - tau * d)
            E_t = energy(u_t)
            if E_t <= E - opts.armijo * tau * slope:
                break
            tau *= 0.5
            if tau < 1e-12:
                break
        if tau < 1e-12:
            # no representable decrease left: the flow sits at a minimum to rounding
            settled = True
            break
        stall = stall + 1 if E - E_t <= 1e-14 * max(1.0, abs(E)) else 0
        u, E = u_t, E_t
        history.append(E)
        if stall >= 50:
            settled = True
            break
        tau = min(tau * 1.5, 4.0)
        if far.any() and float(np.dot(W[far], u[far] ** 2)) > opts.escape_fraction * mu:
            escaped = True
            break
    field_u = GraphField(mesh, u, nonlinearity)
    lam = fld.lagrange_multiplier(field_u, p)
    stat, kirch = sysm.residual_norms(sysm.F(u, lam))
    if escaped:
        msg = f"mass escaped to the half-lines after {it} steps (energy {E:.6g})"
        return _result(field_u, p, lam, stat, kirch, False, it, "gradient-flow", msg, history, Support.ZERO)
    if not settled:
        message = message or f"gradient flow did not settle in {it} steps"
        return _result(field_u, p, lam, stat, kirch, False, it, "gradient-flow", message, history)
    if not polish:
        ok = stat < opts.tol and kirch < opts.tol
        return _result(field_u, p, lam, stat, kirch, ok, it, "gradient-flow", "", history)
    res = newton_bound_state(field_u, p, mu=mu, lam=lam, opts=opts)
    if res.converged and res.energy > E + 1e-8 * max(1.0, abs(E)):
        res.converged = False
        res.message = "Newton polish left the flow's energy level"
    if res.converged and float(np.min(res.field.dofs[~far] * np.sign(np.sum(u)))) < -opts.tol:
        res.converged = False
        res.message = "Newton polish changed sign"
    res.method = "gradient-flow+newton"
    res.iterations += it
    res.history = history + [res.energy]
    return res


# -- multi-start search ------------------------------------------------------------


def _scale_to_mass(u: GraphField, mu: float) -> GraphField:
    return u.scaled(math.sqrt(mu / fld.mass(u)))


def _distinct(a: BoundStateResult, b: BoundStateResult, rtol: float = 1e-4) -> bool:
    if abs(a.lam - b.lam) > 1e-6 * max(1.0, abs(a.lam)):
        return True
    ca = _core_samples(a.field)
    cb = _core_samples(b.field)
    if ca.shape != cb.shape:
        return True
    w = _core_weights(a.field)
    na = math.sqrt(float(np.dot(w, ca * ca)))
    d = min(np.dot(w, (ca - cb) ** 2), np.dot(w, (ca + cb) ** 2))
    return math.sqrt(float(d)) > rtol * max(na, 1e-300)


def _core_samples(u: GraphField) -> np.ndarray:
    return u.samples[u.mesh.on_core]


def _core_weights(u: GraphField) -> np.ndarray:
    return u.mesh.w[u.mesh.on_core]


def _threads(opts: SolverOptions) -> int:
    if opts.threads:
        return max(1, int(opts.threads))
    return max(1, int(os.environ.get("GRAPHNLS_THREADS", "1")))


def _half_line_sup(u: GraphField) -> float:
    m = u.mesh
    vals = [0.0]
    for e in u.graph.halflines:
        if e.id in m.slices:
            vals.append(float(np.max(np.abs(u.samples[m.slices[e.id]]))))
        else:
            vals.append(abs(u.vertex_value(e.tail)))
    return max(vals)


def _decays(r: BoundStateResult, tol: float) -> bool:
    """Whether a truncated-mesh state represents a state on the true half-lines.

    lambda <= 0 states must vanish on every half-line; lambda > 0 states must
    have decayed over the far half of each truncated half-line.
    """
    u = r.field
    if r.lam <= 0:
        return _half_line_sup(u) < math.sqrt(tol)
    m = u.mesh
    peak = float(np.max(np.abs(u.dofs)))
    for e in u.graph.halflines:
        s = u.samples[m.slices[e.id]]
        if float(np.max(np.abs(s[len(s) // 2:]))) >= math.sqrt(tol) * peak:
            return False
    return True


@dataclass
class SearchReport:
    states: list[BoundStateResult]
    attempts: int
    converged_attempts: int
    rejected: dict[str, int]


def multi_start_search(g: MetricGraph, p: float, mu: float, n_starts: int = 10,
                       opts: SolverOptions | None = None, nonlinearity: str = LOCALIZED,
                       seeds: Sequence[GraphField] = (), probe_nonpositive: bool = True,
                       exact_tail: bool = True, flow_assist: bool = True, report: bool = False):
    """Distinct converged nonzero states of mass ``mu`` from seeded starts.

    Start i uses ``default_rng([seed, i])``.  Each start runs a mass-constrained
    Newton solve with exponential tails (lambda > 0) and, when
    ``probe_nonpositive``, a truncated-half-line solve started at lambda < 0
    whose result is accepted only if lambda <= 0 and the state vanishes on the
    half-lines to tolerance.  When the tail solve stalls and ``flow_assist``
    is set, a short projected-gradient run from a fresh random field supplies
    a second starting point.  Without exponential tails (everywhere mode,
    or ``exact_tail=False`` on a compact graph) each start also runs an
    unconstrained-sign solve on the truncated mesh.  ``seeds`` are extra
    initial fields, solved on their own mesh.  Results are merged in start
    order.
    """
    _check_p(p)
    if n_starts < 1:
        raise InputError("need at least one start")
    opts = opts or SolverOptions()
    if nonlinearity == EVERYWHERE:
        exact_tail = False
    if exact_tail and g.halflines:
        exact_mesh = Mesh(g, GridSpec.build(g, opts.h), EXACT_TAIL)
    else:
        exact_mesh = None
    R = opts.R if opts.R is not None else 20.0
    trunc_mesh = Mesh(g, GridSpec.build(g, opts.h, R=R, h_R=opts.h_R or max(opts.h, 0.05)), TRUNCATED)

    def attempt(i: int) -> list[tuple[str, BoundStateResult | None]]:
        rng = np.random.default_rng([opts.seed, i])
        out = []
        amp_log = rng.uniform(-1.5, 1.5)
        if exact_mesh is not None:
            lam0 = float(np.exp(rng.uniform(-3.0, 3.0)))
            d = fld.random_fields(exact_mesh, 1, rng)[0] if i else np.abs(_bump_exact(exact_mesh))
            if not np.any(d):
                d = np.ones_like(d)
            u0 = _scale_to_mass(GraphField(exact_mesh, d, nonlinearity, math.sqrt(lam0)), mu)
            r = newton_bound_state(u0, p, mu=mu, lam=lam0, opts=opts)
            if not r.converged and flow_assist:
                r = _flow_assisted(g, p, mu, trunc_mesh, exact_mesh, nonlinearity, opts, rng) or r
            out.append(("exact", r))
        d = fld.random_fields(trunc_mesh, 1, rng)[0]
        u0 = GraphField(trunc_mesh, d, nonlinearity)
        u0 = _scale_to_mass(u0, mu)
        if probe_nonpositive:
            lam0 = -float(np.exp(rng.uniform(-3.0, 2.0))) * math.exp(amp_log)
            try:
                out.append(("nonpos", newton_bound_state(u0, p, mu=mu, lam=lam0, opts=opts)))
            except NonConvergence:
                out.append(("nonpos", None))
        if exact_mesh is None and (nonlinearity == EVERYWHERE or not g.halflines):
            try:
                out.append(("trunc", newton_bound_state(u0, p, mu=mu, opts=opts)))
            except NonConvergence:
                out.append(("trunc", None))
        return out

    n = _threads(opts)
    if n > 1:
        with ThreadPoolExecutor(n) as ex:
            runs = list(ex.map(attempt, range(n_starts)))
    else:
        runs = [attempt(i) for i in range(n_starts)]
    for s in seeds:
        try:
            runs.append([("seed", newton_bound_state(s, p, mu=mu, opts=opts))])
        except NonConvergence:
            runs.append([("seed", None)])

    states: list[BoundStateResult] = []
    rejected = {"not_converged": 0, "zero": 0, "lambda_positive_probe": 0, "half_line_support": 0}
    attempts = converged = 0
    for run in runs:
        for kind, r in run:
            attempts += 1
            if r is None or not r.converged:
                rejected["not_converged"] += 1
                continue
            converged += 1
            if r.support == Support.ZERO or float(np.max(np.abs(r.field.dofs))) < 1e-6:
                rejected["zero"] += 1
                continue
            if kind == "nonpos" and r.lam > 0:
                rejected["lambda_positive_probe"] += 1
                continue
            if r.field.halfline_mode == TRUNCATED and g.halflines and not _decays(r, opts.tol):
                # a truncated half-line only stands in for the real one if the state has died out
                rejected["half_line_support"] += 1
                continue
            if all(_distinct(r, s) for s in states):
                states.append(r)
    if report:
        return SearchReport(states, attempts, converged, rejected)
    return states


def transfer(u: GraphField, mesh: Mesh, tail_rate: float | None = None) -> GraphField:
    """Re-express ``u`` on another mesh with identical bounded-edge grids."""
    values = {e.id: u.edge_values(e.id)[1] for e in mesh.graph.edges}
    for e in mesh.graph.halflines:
        if e.id in mesh.slices:
            x = mesh.edge_x[e.id]
            xs, vs = u.edge_values(e.id)
            values[e.id] = np.interp(x, xs, vs, right=0.0)
            values[e.id][-1] = 0.0
    return GraphField.from_edge_values(mesh, values, u.nonlinearity, tail_rate)


def _flow_assisted(g, p, mu, trunc_mesh, exact_mesh, nonlinearity, opts, rng):
    d = fld.random_fields(trunc_mesh, 1, rng)[0]
    flow_opts = replace(opts, flow_max_iter=min(opts.flow_max_iter, 400), flow_tol=1e-5)
    fl = ground_state(g, p, mu, grid=trunc_mesh.grid, nonlinearity=nonlinearity, opts=flow_opts,
                      init=d, polish=False)
    if fl.support == Support.ZERO or not fl.lam > 0:
        return None
    u0 = transfer(fl.field, exact_mesh, math.sqrt(fl.lam))
    r = newton_bound_state(u0, p, mu=mu, lam=fl.lam, opts=opts)
    r.method = "gradient-flow+newton"
    return r


def _bump_exact(mesh: Mesh) -> np.ndarray:
    u = np.zeros(mesh.ndof)
    u[:] = 1.0
    return u


# -- scaling -------------------------------------------------------------------------


def scaling_exponents(p: float) -> tuple[float, float, float]:
    """(amplitude, argument, length) exponents of the graph/mass scaling."""
    _check_p(p)
    return 2.0 / (6.0 - p), (p - 2.0) / (6.0 - p), (2.0 - p) / (6.0 - p)


def _rational_power(theta, e: float):
    from fractions import Fraction

    t = Fraction(theta).limit_denominator(10**12) if isinstance(theta, float) else Fraction(theta)
    if float(e).is_integer():
        return t ** int(e)
    return Fraction(float(t) ** e)


def scaling_map(u: GraphField, theta, p: float) -> tuple[MetricGraph, GraphField]:
    """Map ``u`` on G with mass mu to the homothetic graph with mass ``theta * mu``.

    Grid counts are preserved, so samples map one to one.
    """
    if not theta > 0:
        raise InputError("theta must be positive")
    a, b, c = scaling_exponents(p)
    stretch = _rational_power(theta, c)
    g2 = u.graph.scaled(stretch)
    s = float(stretch)
    grid = u.grid
    grid2 = GridSpec(grid.h * s, dict(grid.counts), None if grid.R is None else grid.R * s, grid.n_R)
    mesh2 = Mesh(g2, grid2, u.halfline_mode)
    amp = float(theta) ** a
    rate = None if u.tail_rate is None else u.tail_rate / s
    return g2, GraphField(mesh2, amp * u.dofs, u.nonlinearity, rate)


def scaled_multiplier(lam: float, theta, p: float) -> float:
    _, b, _ = scaling_exponents(p)
    return float(theta) ** (2.0 * b) * lam
