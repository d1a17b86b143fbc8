"""Damped Newton solver for the equality-constrained collocation programs.

Each iteration assembles the KKT system

    [ H + delta I   J^T ] [ dz  ]   [ -grad_z L ]
    [ J             0   ] [ dm  ] = [ -c        ]

with H the Lagrangian Hessian (forward differences of the analytic
gradient), J the constraint Jacobian, and c the constraint values.  The
regularization delta starts at zero and doubles from a small seed whenever
the factorization fails or the line search stalls; a singular system with a
rank-deficient constraint Jacobian additionally gets a small negative shift
on the constraint block.  The step length comes from backtracking on the
Euclidean norm of the full KKT residual.  Problems here have a few hundred
unknowns at most, so everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .transcribe import Transcript

_REGULARIZATION_CAP = 1e8
_MAX_CONSECUTIVE_BUMPS = 60


@dataclass(frozen=True)
class SolverOptions:
    kkt_tolerance: float = 1e-10
    max_iterations: int = 200
    regularization_initial: float = 1e-8
    line_search_shrink: float = 0.5
    min_step: float = 1e-12

    def __post_init__(self):
        if self.kkt_tolerance <= 0 or self.kkt_tolerance >= 1e-4:
            raise ValueError("kkt_tolerance must lie in (0, 1e-4)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.regularization_initial <= 0:
            raise ValueError("regularization_initial must be positive")
        if not 0 < self.line_search_shrink < 1:
            raise ValueError("line_search_shrink must lie in (0, 1)")
        if self.min_step <= 0:
            raise ValueError("min_step must be positive")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    final_kkt_norm: float
    step_history: list = field(default_factory=list)


class MaxIterationsError(RuntimeError):
    """Iteration budget exhausted before reaching tolerance."""

    def __init__(self, report: SolveReport):
        super().__init__(
            f"no convergence in {report.iterations} iterations "
            f"(KKT norm {report.final_kkt_norm:.3e})"
        )
        self.report = report


class SingularKktError(RuntimeError):
    """KKT matrix stayed singular beyond the regularization cap."""


def _lagrangian_gradient(t: Transcript, z, mult):
    return t.objective_gradient(z) + t.jacobian(z).T @ mult


def _kkt_vector(t: Transcript, z, mult):
    return np.concatenate([_lagrangian_gradient(t, z, mult), t.constraints(z)])


def _hessian_fd(t: Transcript, z, mult, step=1e-7):
    """Lagrangian Hessian by forward differences of the analytic gradient."""
    base = _lagrangian_gradient(t, z, mult)
    n = z.size
    H = np.empty((n, n))
    for j in range(n):
        bumped = z.copy()
        bumped[j] += step
        H[:, j] = (_lagrangian_gradient(t, bumped, mult) - base) / step
    return 0.5 * (H + H.T)


def _solve_kkt(H, J, rhs, delta, step_cap):
    """Factor and solve the saddle system; None signals failure.

    Failure means any of: the matrix does not factor, the inertia is wrong
    for a constrained minimizer (must be exactly n positive and m negative
    eigenvalues), the solve is inaccurate, or the primal step is wildly
    long.  All of these call for more regularization, which is the caller's
    job.

    A singular matrix with correct-looking curvature usually means the
    constraint Jacobian itself lost rank (the square Lobatto transcripts do
    this at the optimum); no amount of primal regularization repairs that,
    so the constraint block gets a small negative shift instead, after
    which a full-rank-deficient dual direction shows up as a plain negative
    eigenvalue.
    """
    n, m = H.shape[0], J.shape[0]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = H
    if delta:
        K[:n, :n] += delta * np.eye(n)
    K[:n, n:] = J.T
    K[n:, :n] = J
    dual_shifted = False
    try:
        eigs = np.linalg.eigvalsh(K)
    except np.linalg.LinAlgError:
        return None, dual_shifted
    scale = max(1.0, float(np.max(np.abs(eigs))))
    if np.any(np.abs(eigs) <= 1e-8 * scale):
        dual_shifted = True
        K[n:, n:] = -1e-8 * scale * np.eye(m)
        try:
            eigs = np.linalg.eigvalsh(K)
        except np.linalg.LinAlgError:
            return None, dual_shifted
        scale = max(1.0, float(np.max(np.abs(eigs))))
    zero_tol = 1e-12 * scale
    if np.count_nonzero(eigs > zero_tol) != n:
        return None, dual_shifted
    if np.count_nonzero(eigs < -zero_tol) != m:
        return None, dual_shifted
    try:
        step = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        return None, dual_shifted
    if not np.all(np.isfinite(step)):
        return None, dual_shifted
    residual = np.linalg.norm(K @ step - rhs)
    if residual > 1e-8 * max(1.0, np.linalg.norm(rhs)):
        return None, dual_shifted
    if np.linalg.norm(step[:n]) > step_cap:
        return None, dual_shifted
    return step, dual_shifted


def solve(t: Transcript, opts: SolverOptions = SolverOptions()):
    """Newton-iterate the transcript to a KKT point.

    Returns (z, multipliers, report).  Raises MaxIterationsError with the
    report attached when the budget runs out, SingularKktError when no
    regularization in range rescues the factorization.
    """
    z = t.initial_guess_vector()
    n = t.n_z
    # Least-squares multiplier estimate at the guess.  Starting from zero
    # multipliers would leave a linear objective with a vanishing Lagrangian
    # Hessian and a degenerate first KKT system.
    mult, *_ = np.linalg.lstsq(t.jacobian(z).T, -t.objective_gradient(z), rcond=None)

    report = SolveReport(converged=False, iterations=0, final_kkt_norm=np.inf)

    for iteration in range(opts.max_iterations):
        kkt = _kkt_vector(t, z, mult)
        grad_norm = np.max(np.abs(kkt[:n]))
        cons_norm = np.max(np.abs(kkt[n:])) if kkt.size > n else 0.0
        report.iterations = iteration
        report.final_kkt_norm = max(grad_norm, cons_norm)
        if grad_norm <= opts.kkt_tolerance and cons_norm <= opts.kkt_tolerance:
            report.converged = True
            return z, mult, report

        H = _hessian_fd(t, z, mult)
        J = t.jacobian(z)
        merit = np.linalg.norm(kkt)

        step_cap = 1e6 * max(1.0, np.linalg.norm(z))
        delta = 0.0
        bumps = 0
        while True:
            step, dual_shifted = _solve_kkt(H, J, -kkt, delta, step_cap)
            accepted = False
            if step is not None:
                dz, dm = step[:n], step[n:]
                alpha = 1.0
                while alpha >= opts.min_step:
                    trial_kkt = _kkt_vector(t, z + alpha * dz, mult + alpha * dm)
                    trial_merit = np.linalg.norm(trial_kkt)
                    if np.isfinite(trial_merit) and trial_merit <= merit * (
                        1.0 - 1e-4 * alpha
                    ):
                        accepted = True
                        break
                    alpha *= opts.line_search_shrink
            if accepted:
                z = z + alpha * dz
                mult = mult + alpha * dm
                if dual_shifted:
                    # The shifted dual block leaves a residual floor at the
                    # shift size; a least-squares multiplier replacement
                    # (which can only shrink the gradient part of the
                    # residual) removes it without touching the primals.
                    mult, *_ = np.linalg.lstsq(
                        t.jacobian(z).T, -t.objective_gradient(z), rcond=None
                    )
                report.step_history.append((iteration, float(trial_merit), alpha))
                break
            # Factorization failed or no step length helped: stiffen.
            delta = opts.regularization_initial if delta == 0.0 else 2.0 * delta
            bumps += 1
            if delta > _REGULARIZATION_CAP or bumps > _MAX_CONSECUTIVE_BUMPS:
                raise SingularKktError(
                    f"KKT system unusable at iteration {iteration} "
                    f"(regularization {delta:.1e})"
                )

    kkt = _kkt_vector(t, z, mult)
    report.iterations = opts.max_iterations
    report.final_kkt_norm = float(np.max(np.abs(kkt)))
    raise MaxIterationsError(report)
