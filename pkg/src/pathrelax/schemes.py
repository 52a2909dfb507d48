"""Single-domain time stepping: the IMEX relaxation scheme and its relaxed limit."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import SEGMENT, GridSolution, SegmentPath, gauss_lobatto_5, path_integral
from .errors import CFLViolation, InvalidParam, NonAdmissibleState
from .models import subchar_check

log = logging.getLogger(__name__)


class JumpIntegral:
    """Path integral of a model's matrix across jumps, U_l -> U_r.

    Uses the model's closed form when one exists and the paths are segments,
    and quadrature otherwise.
    """

    def __init__(self, model, phi=SEGMENT, quad=None, use_closed_form=True):
        self.model = model
        self.phi = phi
        self.quad = gauss_lobatto_5() if quad is None else quad
        self.closed_form = (
            use_closed_form and model.has_closed_form and isinstance(phi, SegmentPath)
        )

    def __call__(self, w_l, w_r):
        if self.closed_form:
            return self.model.closed_form_path_integral(w_l, w_r)
        return path_integral(
            self.model.matrix, self.phi, w_l, w_r, self.quad, self.model.admissible
        )


@dataclass
class RelaxationParams:
    lam: np.ndarray
    epsilon: Optional[float] = None
    cfl: float = 0.9
    debug: bool = False

    def __post_init__(self):
        self.lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if np.any(self.lam <= 0):
            raise InvalidParam("relaxation matrix entries must be positive")
        if self.epsilon is not None and not self.epsilon > 0:
            raise InvalidParam("epsilon must be positive")
        if not 0 < self.cfl <= 1:
            raise InvalidParam(f"cfl must lie in (0, 1], got {self.cfl}")

    @classmethod
    def from_mu(cls, mu, m, **kwargs):
        return cls(np.full(m, float(mu)), **kwargs)

    @property
    def mu(self):
        return float(np.max(self.lam))

    @property
    def sqrt_lam(self):
        return np.sqrt(self.lam)


def cfl_dt(dx, mu, cfl):
    if not (dx > 0 and mu > 0):
        raise InvalidParam("dx and mu must be positive")
    if not 0 < cfl <= 1:
        raise InvalidParam(f"cfl must lie in (0, 1], got {cfl}")
    return cfl * dx / np.sqrt(mu)


def _check_dt(dt, dx, params):
    limit = cfl_dt(dx, params.mu, params.cfl)
    if dt > limit * (1.0 + 1e-9):
        raise CFLViolation(f"dt={dt:.6g} exceeds the CFL limit {limit:.6g}")


# -- boundaries -------------------------------------------------------------


class Neumann:
    """Homogeneous Neumann: ghosts copy the adjacent cell (U and V)."""

    def ghost_u(self, side, interior, t):
        return interior.copy()

    def ghost_v(self, side, u_ghost, v_interior, integral):
        return v_interior.copy()

    def __repr__(self):
        return "Neumann()"


class TruncationGhost:
    """Ghost cell holding the truncation state U_a; V ghost per the far-field limit."""

    def __init__(self, ua):
        self.ua = np.asarray(ua, dtype=float)

    def ghost_u(self, side, interior, t):
        return self.ua.copy()

    def ghost_v(self, side, u_ghost, v_interior, integral):
        if side == "left":
            return integral(self.ua, u_ghost)
        return -integral(u_ghost, self.ua)

    def __repr__(self):
        return f"TruncationGhost({self.ua.tolist()})"


class PrescribedPressure:
    """Blood inflow with boundary pressure p0 sin(pi/2 (t - 1/2)) by default."""

    def __init__(self, vessel, p0=2e-3, profile=None):
        self.vessel = vessel
        self.p0 = p0
        self.profile = profile

    def pressure(self, t):
        if self.profile is not None:
            return self.profile(t)
        return self.p0 * np.sin(0.5 * np.pi * (t - 0.5))

    def ghost_u(self, side, interior, t):
        from .coupling import blood_inflow

        if side != "left":
            raise InvalidParam("prescribed pressure is only supported at the left boundary")
        return blood_inflow(self.pressure, t, interior, self.vessel)

    def ghost_v(self, side, u_ghost, v_interior, integral):
        return v_interior.copy()

    def __repr__(self):
        return f"PrescribedPressure(p0={self.p0})"


@dataclass
class BoundarySpec:
    left: object = field(default_factory=Neumann)
    right: object = field(default_factory=Neumann)


def apply_boundary(spec, sol, integral=None, t=None):
    """Ghost states (u_left, u_right, v_left, v_right); the V ghosts are None without V."""
    if spec is None:
        spec = BoundarySpec()
    t = sol.time if t is None else t
    for bc in (spec.left, spec.right):
        if not hasattr(bc, "ghost_u"):
            raise InvalidParam(f"unknown boundary condition {bc!r}")
    ul = spec.left.ghost_u("left", sol.u[0], t)
    ur = spec.right.ghost_u("right", sol.u[-1], t)
    vl = vr = None
    if sol.v is not None:
        vl = spec.left.ghost_v("left", ul, sol.v[0], integral)
        vr = spec.right.ghost_v("right", ur, sol.v[-1], integral)
    return ul, ur, vl, vr


# -- schemes ----------------------------------------------------------------


def cumulative_T(integral, u_cells, left_ghost=None, offset=None):
    """Prefix sums T_j of the jump integrals over all interfaces left of cell j.

    ``offset`` is the value of T in the left ghost cell (zero for a constant
    far field).
    """
    u_cells = np.asarray(u_cells, dtype=float)
    if left_ghost is None:
        left_ghost = u_cells[0]
    ext = np.vstack([left_ghost, u_cells])
    jumps = integral(ext[:-1], ext[1:])
    T = np.cumsum(jumps, axis=0)
    if offset is not None:
        T += offset
    return T


def fluctuations(integral, sqrt_lam, u_l, u_r):
    """Interface fluctuations (D-, D+) of the relaxed scheme."""
    half_jump = 0.5 * integral(u_l, u_r)
    diss = 0.5 * sqrt_lam * (np.asarray(u_r) - np.asarray(u_l))
    return half_jump - diss, half_jump + diss


def _check_state(model, u, t):
    ok = np.asarray(model.admissible(u))
    if not np.all(ok):
        raise NonAdmissibleState(
            f"{type(model).__name__}: non-admissible state", cell=int(np.argmin(ok)), time=t
        )


def relaxed_step(model, params, sol, dt=None, boundary=None, integral=None):
    """One step of the local relaxed (zero relaxation-rate) scheme."""
    dx = sol.grid.dx
    if dt is None:
        dt = cfl_dt(dx, params.mu, params.cfl)
    _check_dt(dt, dx, params)
    integral = integral or JumpIntegral(model)
    boundary = boundary or BoundarySpec()
    ul = boundary.left.ghost_u("left", sol.u[0], sol.time)
    ur = boundary.right.ghost_u("right", sol.u[-1], sol.time)
    ext = np.vstack([ul, sol.u, ur])
    B = integral(ext[:-1], ext[1:])
    c = dt / (2.0 * dx)
    u_new = sol.u - c * (B[:-1] + B[1:]) + c * params.sqrt_lam * (ext[:-2] - 2.0 * sol.u + ext[2:])
    t_new = sol.time + dt
    _check_state(model, u_new, t_new)
    return GridSolution(sol.grid, u_new, None, t_new, sol.meta)


def relaxation_step(model, params, sol, dt=None, boundary=None, integral=None):
    """One IMEX step of the relaxation system at finite epsilon.

    U is advanced explicitly, then T[U^{n+1}] is formed, then V is solved
    pointwise from the linear implicit relaxation equation.
    """
    if sol.v is None:
        raise InvalidParam("relaxation_step needs the auxiliary field v")
    if params.epsilon is None:
        raise InvalidParam("relaxation_step needs a finite epsilon")
    dx = sol.grid.dx
    if dt is None:
        dt = cfl_dt(dx, params.mu, params.cfl)
    _check_dt(dt, dx, params)
    integral = integral or JumpIntegral(model)
    boundary = boundary or BoundarySpec()
    sl = params.sqrt_lam

    ul, ur, vl, vr = apply_boundary(boundary, sol, integral)
    U = np.vstack([ul, sol.u, ur])
    V = np.vstack([vl, sol.v, vr])
    F = 0.5 * (V[:-1] + V[1:]) - 0.5 * sl * (U[1:] - U[:-1])
    G = 0.5 * params.lam * (U[:-1] + U[1:]) - 0.5 * sl * (V[1:] - V[:-1])
    r = dt / dx
    u_new = sol.u - r * (F[1:] - F[:-1])
    t_new = sol.time + dt
    _check_state(model, u_new, t_new)

    ghost_new = boundary.left.ghost_u("left", u_new[0], t_new)
    offset = boundary.left.ghost_v("left", ghost_new, np.zeros(sol.m), integral)
    T = cumulative_T(integral, u_new, ghost_new, offset)
    k = dt / params.epsilon
    v_new = (sol.v - r * (G[1:] - G[:-1]) + k * T) / (1.0 + k)
    return GridSolution(sol.grid, u_new, v_new, t_new, sol.meta)


def source_step(model, dt, sol):
    """Explicit Euler on the source term (Lie splitting after the hyperbolic step)."""
    if not model.has_source:
        return sol
    _check_state(model, sol.u, sol.time)
    out = sol.copy()
    out.u = sol.u + dt * model.source(sol.u)
    return out


def well_prepared_v(model, sol, boundary=None, integral=None):
    """Initial auxiliary field V = T[U] for the relaxation scheme."""
    integral = integral or JumpIntegral(model)
    boundary = boundary or BoundarySpec()
    ghost = boundary.left.ghost_u("left", sol.u[0], sol.time)
    offset = boundary.left.ghost_v("left", ghost, np.zeros(sol.m), integral)
    return cumulative_T(integral, sol.u, ghost, offset)


def time_steps(t0, t_end, dt):
    """Yield step sizes from t0 to t_end; the last one is clipped to land on t_end."""
    if dt <= 0:
        raise InvalidParam("dt must be positive")
    n = int(np.ceil((t_end - t0) / dt - 1e-9))
    for k in range(max(n, 0)):
        yield dt if k < n - 1 else min(dt, (t_end - t0) - (n - 1) * dt)


def solve(model, params, sol, t_end, scheme="relaxed", boundary=None, integral=None,
          callback=None):
    """Integrate one domain to ``t_end`` with the chosen scheme.

    ``scheme`` is "relaxed" or "relaxation"; source terms are applied by
    splitting after every hyperbolic step.
    """
    integral = integral or JumpIntegral(model)
    boundary = boundary or BoundarySpec()
    if scheme == "relaxed":
        step = relaxed_step
    elif scheme == "relaxation":
        step = relaxation_step
        if sol.v is None:
            sol = sol.copy()
            sol.v = well_prepared_v(model, sol, boundary, integral)
    else:
        raise InvalidParam(f"unknown scheme {scheme!r}")
    dt = cfl_dt(sol.grid.dx, params.mu, params.cfl)
    t_start = sol.time
    for n, h in enumerate(time_steps(sol.time, t_end, dt)):
        if params.debug:
            report = subchar_check(model, params.lam, sol.u)
            assert report.passed, str(report)
        sol = step(model, params, sol, h, boundary, integral)
        sol = source_step(model, h, sol)
        if callback is not None:
            callback(n, sol)
    sol.time = t_end if t_end > t_start else sol.time
    return sol
