"""Nonlinear solution strategies for the positivity-constrained problems.

Four drivers are provided:

* newton_standard      — full Newton steps, no safeguards;
* newton_safeguarded   — Newton + fraction-to-the-boundary ("99% rule")
                         step caps + Armijo backtracking on the residual
                         merit phi_mu(u) = 0.5 ||G(u) - mu H(u)||^2;
* barrier_solve        — mu-continuation on the log-barrier energy
                         J_mu(u) = J(u) - mu int ln(u), each subproblem
                         solved by newton_safeguarded and warm-started
                         from the previous minimizer, with an optional
                         final mu = 0 polish;
* classical_barrier_minimize — the finite-dimensional log-barrier loop
                         for smooth objectives on the positive orthant,
                         used to validate the optimizer machinery on
                         problems with known answers.

Every accepted step stores enough data (merit values, slope, step
sizes, minimum coefficient) to replay the Armijo, descent and
feasibility certificates after the fact.
"""

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import LineSearchFailure, NonpositiveState
from .fem import apply_dirichlet, assemble_jacobian, assemble_residual, workspace_for
from .linalg import cg_solve
from .problem import as_coefficients


class Sign(Enum):
    POSITIVE = "+"
    NEGATIVE = "-"
    MIXED = "+/-"


def classify_sign(u):
    """Positive/negative/mixed classification of a coefficient vector."""
    u = as_coefficients(u)
    if np.all(u > 0):
        return Sign.POSITIVE
    if np.all(u < 0):
        return Sign.NEGATIVE
    return Sign.MIXED


@dataclass
class SolverConfig:
    """Tolerances and schedule constants shared by all drivers."""

    eps: float = 1.0e-7
    mu0: float = 1.0
    gamma: float = 0.1
    eta: float = 1.0e-4
    backtrack: float = 0.5
    max_outer: int = 60
    max_inner: int = 100
    final_polish_mu_zero: bool = True

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be > 0")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 < self.eta < 0.5:
            raise ValueError("eta must lie in (0, 1/2)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")


@dataclass
class IterationRecord:
    """One accepted Newton/backtracking step."""

    mu: float
    residual_norm: float        # ||G - mu H|| before the step
    phi_before: float
    phi_after: float
    alpha_bar: float
    alpha: float
    grad_dot_dir: float         # slope of the merit along the step
    dir_dot_residual: float     # w.(G - mu H) descent test value
    fallback_used: bool
    min_free_coeff: float       # min of u on unconstrained dofs after the step
    cg_status: str


@dataclass
class StageRecord:
    """One barrier subproblem (fixed mu)."""

    mu: float
    tolerance: float
    initial_residual_norm: float
    newton_iterations: int


@dataclass
class SolveReport:
    method: str
    converged: bool = False
    outer_iterations: int = 0
    total_newton_iterations: int = 0
    final_residual: float = np.inf
    residual_history: list = field(default_factory=list)
    mu_trajectory: list = field(default_factory=list)
    sign: Sign = Sign.MIXED
    multiplier_estimates: np.ndarray = field(default_factory=lambda: np.zeros(0))
    wall_time: float = 0.0
    iterations: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    failure_reason: str = ""
    solution: np.ndarray = field(default_factory=lambda: np.zeros(0))


def step_to_boundary(u, w, free=None, fraction=0.99):
    """Largest safe step along w keeping u strictly positive.

    alpha_max = min over {i : w_i < 0} of -u_i / w_i restricted to the
    unconstrained indices; the returned cap is min(fraction*alpha_max, 1),
    and exactly 1 when no component of w is negative.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if free is not None:
        u, w = u[free], w[free]
    if np.any(u <= 0):
        raise NonpositiveState("step_to_boundary requires u > 0 componentwise")
    neg = w < 0
    if not np.any(neg):
        return 1.0
    alpha_max = float(np.min(-u[neg] / w[neg]))
    return min(fraction * alpha_max, 1.0)


def armijo_backtrack(
    merit, grad_dot_dir, u, w, alpha_bar, eta=1.0e-4, backtrack=0.5, max_halvings=40
):
    """Largest alpha in {alpha_bar * backtrack^k} with sufficient decrease.

    merit(v) is evaluated at trial points v = u + alpha*w; the returned
    alpha satisfies merit(u + alpha*w) <= merit(u) + eta*alpha*grad_dot_dir.
    Raises LineSearchFailure after max_halvings rejected trials.
    """
    if not grad_dot_dir < 0:
        raise ValueError(f"grad_dot_dir must be negative, got {grad_dot_dir}")
    if not alpha_bar > 0:
        raise ValueError(f"alpha_bar must be positive, got {alpha_bar}")
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    phi0 = merit(u)
    alpha = float(alpha_bar)
    for _ in range(max_halvings + 1):
        trial = merit(u + alpha * w)
        if np.isfinite(trial) and trial <= phi0 + eta * alpha * grad_dot_dir:
            return alpha
        alpha *= backtrack
    raise LineSearchFailure(
        f"no sufficient decrease after {max_halvings} halvings (phi0={phi0:.3e})"
    )


def _unbarriered_residual_norm(spec, mesh, u):
    return float(np.linalg.norm(assemble_residual(spec, mesh, u, 0.0)))


def _finalize(report, spec, mesh, u, t0):
    report.solution = u.copy()
    report.sign = classify_sign(u)
    report.total_newton_iterations = len(report.iterations)
    try:
        report.final_residual = _unbarriered_residual_norm(spec, mesh, u)
    except NonpositiveState:
        report.final_residual = np.inf
    report.wall_time = time.perf_counter() - t0
    return report


def newton_standard(spec, mesh, u0, config=None):
    """Plain Newton: full steps A(u) w = -G(u), no positivity safeguard.

    Stops when ||G|| <= eps or after max_inner steps (converged=False);
    a NonpositiveState raised by the assembly (positivity-demanding
    problems only) is reported as a failure rather than an exception.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    u = apply_dirichlet(u0, mesh, spec).coefficients
    report = SolveReport(method="newton")
    try:
        for _ in range(config.max_inner + 1):
            system = assemble_jacobian(spec, mesh, u, 0.0)
            rn = float(np.linalg.norm(system.residual))
            if not np.isfinite(rn):
                report.failure_reason = "nonfinite residual"
                break
            report.residual_history.append(rn)
            if rn <= config.eps:
                report.converged = True
                break
            if len(report.iterations) >= config.max_inner:
                report.failure_reason = f"no convergence in {config.max_inner} iterations"
                break
            result = cg_solve(system.jacobian, -system.residual)
            u = u + result.x
            report.iterations.append(
                IterationRecord(
                    mu=0.0,
                    residual_norm=rn,
                    phi_before=0.5 * rn * rn,
                    phi_after=np.nan,
                    alpha_bar=np.nan,
                    alpha=1.0,
                    grad_dot_dir=np.nan,
                    dir_dot_residual=float(np.dot(result.x, system.residual)),
                    fallback_used=False,
                    min_free_coeff=float(u.min()) if u.size else np.nan,
                    cg_status=result.status.value,
                )
            )
    except NonpositiveState as exc:
        report.failure_reason = f"nonpositive state: {exc}"
    return _finalize(report, spec, mesh, u, t0)


def _require_positive_start(mesh, u):
    free = ~workspace_for(mesh).dirichlet_mask
    if np.any(u[free] <= 0):
        raise NonpositiveState("safeguarded Newton requires a strictly positive start")


def _safeguarded_loop(spec, mesh, u, config, mu, tol, report):
    """Shared inner loop; appends records to `report` and returns
    (u, converged, reason)."""
    free = ~workspace_for(mesh).dirichlet_mask
    stagnant = 0
    for _ in range(config.max_inner + 1):
        system = assemble_jacobian(spec, mesh, u, mu)
        f = system.residual_vector(mu)
        fn = float(np.linalg.norm(f))
        if not np.isfinite(fn):
            return u, False, "nonfinite residual"
        report.residual_history.append(fn)
        if fn <= tol:
            return u, True, ""
        inner_done = sum(1 for r in report.iterations if r.mu == mu)
        if inner_done >= config.max_inner:
            return u, False, f"no convergence in {config.max_inner} iterations (mu={mu:g})"

        matrix = system.system_matrix(mu)
        result = cg_solve(matrix, -f)
        w = result.x
        w_dot_f = float(np.dot(w, f))
        fallback = False
        if not w_dot_f < 0:
            w = -f
            fallback = True
            w_dot_f = -fn * fn
        grad_dot_dir = float(np.dot(matrix @ w, f))  # merit slope, grad phi = B f
        if not grad_dot_dir < 0:
            return u, False, f"no descent direction at mu={mu:g}"

        alpha_bar = step_to_boundary(u, w, free=free)
        phi0 = 0.5 * fn * fn
        current = u

        def merit(v):
            if v is current:
                return phi0
            try:
                r = assemble_residual(spec, mesh, v, mu)
            except NonpositiveState:
                return np.inf
            return 0.5 * float(np.dot(r, r))

        try:
            alpha = armijo_backtrack(
                merit,
                grad_dot_dir,
                u,
                w,
                alpha_bar,
                eta=config.eta,
                backtrack=config.backtrack,
            )
        except LineSearchFailure as exc:
            return u, False, f"line search failure at mu={mu:g}: {exc}"

        u = u + alpha * w
        phi_after = merit(u)
        report.iterations.append(
            IterationRecord(
                mu=mu,
                residual_norm=fn,
                phi_before=phi0,
                phi_after=phi_after,
                alpha_bar=alpha_bar,
                alpha=alpha,
                grad_dot_dir=grad_dot_dir,
                dir_dot_residual=w_dot_f,
                fallback_used=fallback,
                min_free_coeff=float(u[free].min()) if free.any() else np.inf,
                cg_status=result.status.value,
            )
        )
        step = alpha * float(np.linalg.norm(w))
        if step < 1e-14 * max(1.0, float(np.linalg.norm(u))):
            stagnant += 1
        else:
            stagnant = 0
        if stagnant >= 5:
            return u, False, f"stagnation: negligible steps at mu={mu:g}"
    return u, False, "iteration limit"


def newton_safeguarded(spec, mesh, u0, config=None, mu=0.0, tol=None):
    """Newton with the 99% positivity cap and Armijo backtracking.

    Solves [A + mu M] w = -[G - mu H]; the step is capped by
    step_to_boundary and then backtracked on phi = 0.5||G - mu H||^2.
    Converged means ||G - mu H|| <= tol (default config.eps).
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    u = apply_dirichlet(u0, mesh, spec).coefficients
    _require_positive_start(mesh, u)
    report = SolveReport(method="safeguarded")
    if mu > 0:
        report.mu_trajectory.append(mu)
    active_tol = config.eps if tol is None else tol
    try:
        u, report.converged, report.failure_reason = _safeguarded_loop(
            spec, mesh, u, config, mu, active_tol, report
        )
    except NonpositiveState as exc:
        report.failure_reason = f"nonpositive state: {exc}"
    return _finalize(report, spec, mesh, u, t0)


def subproblem_tolerance(mu, initial_residual_norm, eps):
    """Residual target for one barrier stage:
    max(eps_mu * ||f(u0)||, eps_mu) with eps_mu = max(min(0.1, mu), eps)."""
    eps_mu = max(min(0.1, mu), eps)
    return max(eps_mu * initial_residual_norm, eps_mu)


def barrier_solve(spec, mesh, u0, config=None):
    """Primal barrier energy method with mu-continuation.

    Runs safeguarded Newton on each barrier subproblem, shrinking mu by
    gamma whenever the subproblem tolerance is met and warm-starting
    from the previous solution; once mu drops below eps a final
    subproblem with mu = 0 polishes to ||G|| <= eps (the reported,
    unbarriered convergence test).  mu0 = 0 degenerates to safeguarded
    Newton on the original problem.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    u = apply_dirichlet(u0, mesh, spec).coefficients
    _require_positive_start(mesh, u)
    report = SolveReport(method="barrier")
    mu = float(config.mu0)
    try:
        while mu >= config.eps and len(report.stages) < config.max_outer:
            f0 = float(np.linalg.norm(assemble_residual(spec, mesh, u, mu)))
            tol = subproblem_tolerance(mu, f0, config.eps)
            before = len(report.iterations)
            u, ok, reason = _safeguarded_loop(spec, mesh, u, config, mu, tol, report)
            report.mu_trajectory.append(mu)
            report.stages.append(
                StageRecord(mu, tol, f0, len(report.iterations) - before)
            )
            if not ok:
                report.failure_reason = reason
                report.outer_iterations = len(report.stages)
                return _finalize(report, spec, mesh, u, t0)
            report.multiplier_estimates = mu / u
            mu *= config.gamma

        if config.final_polish_mu_zero:
            f0 = float(np.linalg.norm(assemble_residual(spec, mesh, u, 0.0)))
            before = len(report.iterations)
            u, ok, reason = _safeguarded_loop(
                spec, mesh, u, config, 0.0, config.eps, report
            )
            report.mu_trajectory.append(0.0)
            report.stages.append(
                StageRecord(0.0, config.eps, f0, len(report.iterations) - before)
            )
            report.multiplier_estimates = np.zeros(0)
            if not ok:
                report.failure_reason = reason
                report.outer_iterations = len(report.stages)
                return _finalize(report, spec, mesh, u, t0)
    except NonpositiveState as exc:
        report.failure_reason = f"nonpositive state: {exc}"
        report.outer_iterations = len(report.stages)
        return _finalize(report, spec, mesh, u, t0)

    report.outer_iterations = len(report.stages)
    report = _finalize(report, spec, mesh, u, t0)
    report.converged = report.final_residual <= config.eps
    if not report.converged and not report.failure_reason:
        report.failure_reason = "unbarriered residual above eps"
    return report


def classical_barrier_minimize(f, grad, hess, x0, config=None):
    """Log-barrier minimization of f on the positive orthant.

    Minimizes B_mu(x) = f(x) - mu sum(ln x_i) for the geometric mu
    schedule, solving (hess + mu diag(x^-2)) p = -(grad - mu x^-1) by a
    dense factorization at each inner step, with the 99% rule and Armijo
    backtracking on B_mu itself.  Returns (x, report); the report's
    multiplier estimates are mu/x_i at the final positive mu.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    x = np.asarray(x0, dtype=float).copy()
    if np.any(x <= 0):
        raise NonpositiveState("classical barrier requires x0 > 0")
    report = SolveReport(method="classical_barrier")
    mu = float(config.mu0)
    if mu <= 0:
        raise ValueError("classical barrier requires mu0 > 0")
    n = x.size

    def barrier_value(y, mu):
        if np.any(y <= 0):
            return np.inf
        return float(f(y)) - mu * float(np.sum(np.log(y)))

    def barrier_grad(y, mu):
        return np.asarray(grad(y), dtype=float) - mu / y

    last_mu = mu
    converged = True
    while mu >= config.eps and len(report.stages) < config.max_outer:
        g0n = float(np.linalg.norm(barrier_grad(x, mu)))
        tol = subproblem_tolerance(mu, g0n, config.eps)
        its = 0
        stage_ok = False
        for _ in range(config.max_inner + 1):
            g = barrier_grad(x, mu)
            gn = float(np.linalg.norm(g))
            report.residual_history.append(gn)
            if gn <= tol:
                stage_ok = True
                break
            hbar = np.asarray(hess(x), dtype=float) + mu * np.diag(x**-2.0)
            try:
                p = np.linalg.solve(hbar, -g)
            except np.linalg.LinAlgError:
                p = -g
            slope = float(np.dot(g, p))
            fallback = False
            if not slope < 0:
                p = -g
                fallback = True
                slope = -gn * gn
            alpha_bar = step_to_boundary(x, p)
            phi0 = barrier_value(x, mu)
            try:
                alpha = armijo_backtrack(
                    lambda y: barrier_value(y, mu),
                    slope,
                    x,
                    p,
                    alpha_bar,
                    eta=config.eta,
                    backtrack=config.backtrack,
                )
            except LineSearchFailure as exc:
                report.failure_reason = f"line search failure at mu={mu:g}: {exc}"
                break
            x = x + alpha * p
            its += 1
            report.iterations.append(
                IterationRecord(
                    mu=mu,
                    residual_norm=gn,
                    phi_before=phi0,
                    phi_after=barrier_value(x, mu),
                    alpha_bar=alpha_bar,
                    alpha=alpha,
                    grad_dot_dir=slope,
                    dir_dot_residual=slope,
                    fallback_used=fallback,
                    min_free_coeff=float(x.min()),
                    cg_status="dense",
                )
            )
        report.mu_trajectory.append(mu)
        report.stages.append(StageRecord(mu, tol, g0n, its))
        if not stage_ok:
            converged = False
            if not report.failure_reason:
                report.failure_reason = f"subproblem at mu={mu:g} not solved"
            break
        last_mu = mu
        mu *= config.gamma

    report.converged = converged
    report.outer_iterations = len(report.stages)
    report.total_newton_iterations = len(report.iterations)
    report.multiplier_estimates = last_mu / x
    report.final_residual = float(np.linalg.norm(np.asarray(grad(x), dtype=float)))
    report.sign = classify_sign(x)
    report.solution = x.copy()
    report.wall_time = time.perf_counter() - t0
    return x, report
