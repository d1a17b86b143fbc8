"""Collocation transcription of an optimal control problem, and the way back.

``transcribe`` turns a problem definition plus a node set into a
finite-dimensional equality-constrained program: decision variables are the
state samples (at all N+1 grid points for the augmented method, at the N
collocation points for the square one) and the control samples at the N
collocation points.  The defect constraints force the interpolating
polynomial's derivative to match the dynamics at every collocation point;
the objective adds the endpoint costs to a quadrature of the running cost.

``extract_costates`` rescales the defect multipliers into costate samples,
and ``kkt_residuals`` evaluates the four first-order optimality residuals of
the discrete problem so a solved instance can be audited independently of
the solver that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .discretization import (
    DiffMatrix,
    MatrixKind,
    build_new_lobatto_D,
    build_standard_lobatto_D,
)
from .ocp import OcpDefinition
from .orthopoly import NodeSet


class Method(Enum):
    NEW_LOBATTO = "new-lobatto"
    STANDARD_LOBATTO = "standard-lobatto"


class Transcript:
    """Finite-dimensional image of one problem on one grid.

    Layout of the decision vector ``z``: state samples node-major first
    (``n_state_nodes`` blocks of ``n_x``), then control samples node-major
    (``n`` blocks of ``n_u``).  Constraint vector: defect rows node-major
    (``n`` blocks of ``n_x``), then the initial boundary rows, then the
    final boundary rows.  All evaluation methods are pure.
    """

    def __init__(self, ocp: OcpDefinition, ns: NodeSet, method: Method):
        self.ocp = ocp
        self.ns = ns
        self.method = method
        self.n = ns.n
        self.n_x = ocp.n_x
        self.n_u = ocp.n_u
        self.half_dt = 0.5 * (ocp.tf - ocp.t0)
        self._mid = 0.5 * (ocp.tf + ocp.t0)

        if method is Method.NEW_LOBATTO:
            self.diff = build_new_lobatto_D(ns)
            state_taus = ns.all_nodes
        elif method is Method.STANDARD_LOBATTO:
            self.diff = build_standard_lobatto_D(ns)
            state_taus = ns.collocation
        else:
            raise ValueError(f"unknown method {method!r}")

        self.n_state_nodes = state_taus.size
        self.state_times = self.map_time(state_taus)
        self.collocation_times = self.map_time(ns.collocation)
        self.n_defect = self.n * self.n_x
        self.n_state_vars = self.n_state_nodes * self.n_x
        self.n_z = self.n_state_vars + self.n * self.n_u
        self.n_constraints = self.n_defect + ocp.n_phi0 + ocp.n_phif

        # The defect rows are linear in the states; precompute that block.
        self._defect_state_block = -np.kron(
            self.diff.entries, np.eye(self.n_x)
        ) / self.half_dt

        self._validate_shapes()

    # -- layout helpers ----------------------------------------------------

    def map_time(self, tau):
        """Affine map from the reference interval to problem time."""
        return self.half_dt * np.asarray(tau, dtype=float) + self._mid

    def state_slice(self, i: int) -> slice:
        return slice(i * self.n_x, (i + 1) * self.n_x)

    def control_slice(self, k: int) -> slice:
        base = self.n_state_vars + k * self.n_u
        return slice(base, base + self.n_u)

    def unpack(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n_z,):
            raise ValueError(f"expected decision vector of length {self.n_z}")
        states = z[: self.n_state_vars].reshape(self.n_state_nodes, self.n_x)
        controls = z[self.n_state_vars :].reshape(self.n, self.n_u)
        return states, controls

    def pack(self, states, controls):
        return np.concatenate([np.ravel(states), np.ravel(controls)])

    def initial_guess_vector(self) -> np.ndarray:
        states = np.empty((self.n_state_nodes, self.n_x))
        controls = np.empty((self.n, self.n_u))
        for i, t in enumerate(self.state_times):
            states[i], _ = self.ocp.initial_guess(t)
        for k, t in enumerate(self.collocation_times):
            _, controls[k] = self.ocp.initial_guess(t)
        return self.pack(states, controls)

    # -- NLP callbacks -----------------------------------------------------

    def objective(self, z) -> float:
        states, controls = self.unpack(z)
        ocp = self.ocp
        total = ocp.endpoint_cost_initial(ocp.t0, states[0])
        total += ocp.endpoint_cost_final(ocp.tf, states[self.n - 1])
        running = 0.0
        for k, t in enumerate(self.collocation_times):
            running += self.ns.weights[k] * ocp.running_cost(t, states[k], controls[k])
        return float(total + self.half_dt * running)

    def objective_gradient(self, z) -> np.ndarray:
        states, controls = self.unpack(z)
        ocp = self.ocp
        g = np.zeros(self.n_z)
        for k, t in enumerate(self.collocation_times):
            hx, hu = ocp.running_cost_gradients(t, states[k], controls[k])
            scale = self.half_dt * self.ns.weights[k]
            g[self.state_slice(k)] += scale * np.asarray(hx)
            g[self.control_slice(k)] += scale * np.asarray(hu)
        g[self.state_slice(0)] += ocp.endpoint_cost_initial_gradient(ocp.t0, states[0])
        g[self.state_slice(self.n - 1)] += ocp.endpoint_cost_final_gradient(
            ocp.tf, states[self.n - 1]
        )
        return g

    def constraints(self, z) -> np.ndarray:
        states, controls = self.unpack(z)
        ocp = self.ocp
        rhs = np.empty((self.n, self.n_x))
        for k, t in enumerate(self.collocation_times):
            rhs[k] = ocp.dynamics(t, states[k], controls[k])
        defects = rhs - (self.diff.entries @ states) / self.half_dt
        tail = [defects.ravel()]
        tail.append(np.atleast_1d(ocp.boundary_initial(ocp.t0, states[0])))
        tail.append(np.atleast_1d(ocp.boundary_final(ocp.tf, states[self.n - 1])))
        return np.concatenate(tail)

    def jacobian(self, z) -> np.ndarray:
        states, controls = self.unpack(z)
        ocp = self.ocp
        J = np.zeros((self.n_constraints, self.n_z))
        J[: self.n_defect, : self.n_state_vars] = self._defect_state_block
        for k, t in enumerate(self.collocation_times):
            A, B = ocp.dynamics_jacobians(t, states[k], controls[k])
            rows = slice(k * self.n_x, (k + 1) * self.n_x)
            J[rows, self.state_slice(k)] += A
            J[rows, self.control_slice(k)] = B
        row0 = self.n_defect
        J[row0 : row0 + ocp.n_phi0, self.state_slice(0)] = np.atleast_2d(
            ocp.boundary_initial_jacobian(ocp.t0, states[0])
        )
        rowf = row0 + ocp.n_phi0
        if ocp.n_phif:
            J[rowf:, self.state_slice(self.n - 1)] = np.atleast_2d(
                ocp.boundary_final_jacobian(ocp.tf, states[self.n - 1])
            )
        return J

    # -- construction checks ----------------------------------------------

    def _validate_shapes(self):
        ocp = self.ocp
        x, u = ocp.initial_guess(ocp.t0)
        x = np.asarray(x)
        u = np.asarray(u)
        if x.shape != (self.n_x,) or u.shape != (self.n_u,):
            raise ValueError(
                f"initial_guess returned shapes {x.shape}/{u.shape}, "
                f"expected ({self.n_x},)/({self.n_u},)"
            )
        f = np.asarray(ocp.dynamics(ocp.t0, x, u))
        if f.shape != (self.n_x,):
            raise ValueError(f"dynamics returned shape {f.shape}")
        A, B = ocp.dynamics_jacobians(ocp.t0, x, u)
        if np.shape(A) != (self.n_x, self.n_x) or np.shape(B) != (self.n_x, self.n_u):
            raise ValueError("dynamics Jacobian shapes do not match n_x, n_u")
        phi0 = np.atleast_1d(ocp.boundary_initial(ocp.t0, x))
        phif = np.atleast_1d(ocp.boundary_final(ocp.tf, x))
        if phi0.shape != (ocp.n_phi0,):
            raise ValueError(f"boundary_initial returned shape {phi0.shape}")
        if phif.shape != (ocp.n_phif,):
            raise ValueError(f"boundary_final returned shape {phif.shape}")


def transcribe(ocp: OcpDefinition, ns: NodeSet, method: Method) -> Transcript:
    """Build the discrete program for one problem, grid, and method."""
    return Transcript(ocp, ns, method)


@dataclass(frozen=True)
class Solution:
    """A solved instance in problem-native quantities.

    ``times`` lists the state sample times in internal order, which puts the
    extra near-midpoint sample last for the augmented method; consumers that
    want chronological output sort by time.  Costates and controls live at
    the N collocation times only.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    costates: np.ndarray
    multipliers_raw: np.ndarray
    boundary_multipliers: tuple
    objective_value: float
    kkt_residual: float


def extract_costates(t: Transcript, raw_multipliers, ns: NodeSet) -> np.ndarray:
    """Costate samples from raw equality multipliers.

    The defect multiplier lambda-tilde at node k absorbs one quadrature
    weight and half the horizon length; undoing that gives the costate:
    lambda_k = 2 lambda-tilde_k / (w_k (tf - t0)).
    """
    raw = np.asarray(raw_multipliers, dtype=float)
    if raw.shape != (t.n_constraints,):
        raise ValueError(
            f"expected {t.n_constraints} multipliers, got {raw.shape}"
        )
    lam_tilde = raw[: t.n_defect].reshape(t.n, t.n_x)
    dt = t.ocp.tf - t.ocp.t0
    return 2.0 * lam_tilde / (ns.weights[:, None] * dt)


def assemble_solution(
    t: Transcript, z, multipliers, kkt_residual: float
) -> Solution:
    states, controls = t.unpack(z)
    raw = np.asarray(multipliers, dtype=float)
    nu0 = raw[t.n_defect : t.n_defect + t.ocp.n_phi0].copy()
    nuf = raw[t.n_defect + t.ocp.n_phi0 :].copy()
    return Solution(
        times=t.state_times.copy(),
        states=states.copy(),
        controls=controls.copy(),
        costates=extract_costates(t, raw, t.ns),
        multipliers_raw=raw.copy(),
        boundary_multipliers=(nu0, nuf),
        objective_value=t.objective(z),
        kkt_residual=float(kkt_residual),
    )


@dataclass(frozen=True)
class KktResidualReport:
    """Infinity norms of the four discrete first-order conditions."""

    state_equation: float
    adjoint: float
    exceptional_column: float
    control: float

    @property
    def max_abs(self) -> float:
        return max(
            self.state_equation,
            self.adjoint,
            self.exceptional_column,
            self.control,
        )


def kkt_residuals(
    t: Transcript,
    sol: Solution,
    ns: NodeSet,
    D: DiffMatrix,
    Ddual: DiffMatrix,
) -> KktResidualReport:
    """Audit a solved instance against the discrete optimality conditions.

    The four residuals are, node by node: the weighted state-equation
    defect; the adjoint equation driven by the dual matrix with the endpoint
    costate jumps; the weighted combination of costates against the extra
    sample's matrix column, which must vanish for the costates to stay one
    degree below the state polynomial; and control stationarity.
    """
    if t.method is not Method.NEW_LOBATTO:
        raise ValueError("residual audit is defined for the augmented method")
    if D.kind is not MatrixKind.NEW_LOBATTO or Ddual.kind is not MatrixKind.DUAL:
        raise ValueError("need the rectangular matrix and its dual")

    ocp = t.ocp
    w = ns.weights
    half = t.half_dt
    states = sol.states
    controls = sol.controls
    lam = sol.costates
    nu0, nuf = sol.boundary_multipliers

    n = t.n
    f_all = np.empty((n, t.n_x))
    grad_x = np.empty((n, t.n_x))
    grad_u = np.empty((n, t.n_u))
    for k, tk in enumerate(t.collocation_times):
        xk, uk = states[k], controls[k]
        f_all[k] = ocp.dynamics(tk, xk, uk)
        A, B = ocp.dynamics_jacobians(tk, xk, uk)
        hx, hu = ocp.running_cost_gradients(tk, xk, uk)
        grad_x[k] = half * w[k] * (np.asarray(hx) + A.T @ lam[k])
        grad_u[k] = half * w[k] * (np.asarray(hu) + B.T @ lam[k])

    # (a) weighted state-equation defect.
    defect = f_all - (D.entries @ states) / half
    res_state = np.max(np.abs(w[:, None] * half * defect))

    # (b) adjoint equation with the endpoint jumps on the right-hand side.
    adjoint = grad_x + w[:, None] * (Ddual.entries @ lam)
    adjoint[0] += np.asarray(
        ocp.endpoint_cost_initial_gradient(ocp.t0, states[0])
    ) + np.atleast_2d(ocp.boundary_initial_jacobian(ocp.t0, states[0])).T @ nu0
    adjoint[n - 1] += np.asarray(
        ocp.endpoint_cost_final_gradient(ocp.tf, states[n - 1])
    )
    if ocp.n_phif:
        adjoint[n - 1] += (
            np.atleast_2d(ocp.boundary_final_jacobian(ocp.tf, states[n - 1])).T @ nuf
        )
    adjoint[n - 1] -= lam[n - 1]
    adjoint[0] += lam[0]
    res_adjoint = np.max(np.abs(adjoint))

    # (c) weighted costates against the extra sample's column.
    res_exceptional = np.max(np.abs((w[:, None] * lam).T @ D.entries[:, -1]))

    # (d) control stationarity.
    res_control = np.max(np.abs(grad_u))

    return KktResidualReport(
        state_equation=float(res_state),
        adjoint=float(res_adjoint),
        exceptional_column=float(res_exceptional),
        control=float(res_control),
    )


def costate_leading_coefficient(costates, ns: NodeSet) -> np.ndarray:
    """Degree-(N-1) Legendre coefficient of each costate component.

    Computed with the discrete Gauss-Lobatto inner product on the
    collocation grid.  A solution whose costates really are polynomials of
    degree N-2 or less shows a coefficient at rounding level.
    """
    from .orthopoly import legendre_eval

    lam = np.asarray(costates, dtype=float)
    p_vals, _ = legendre_eval(ns.n - 1, ns.collocation)
    weighted = ns.weights * p_vals
    return (weighted @ lam) / np.dot(weighted, p_vals)
