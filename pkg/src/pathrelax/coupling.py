"""Coupling two nonconservative systems at a static interface at x = 0.

The left domain holds cells -N1..-1 and the right domain cells 0..N2-1.
Interface data is parametrized along the linear Lax curves of the
relaxation system,

    U_R = U_0^- - Lambda_1^{-1/2} sigma^-,   V_R = V_0^- + sigma^-,
    U_L = U_0^+ + Lambda_2^{-1/2} sigma^+,   V_L = V_0^+ + sigma^+,

and (sigma^-, sigma^+) is found by Newton's method on the coupling
conditions.  In the relaxed scheme the interface fluctuations are simply
sigma^- (cell -1) and -sigma^+ (cell 0), so no nonlocal sums are formed.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import SEGMENT, Grid1D, GridSolution, PathFamily, gauss_lobatto_5
from .errors import InvalidParam, NoConvergence, NonAdmissibleState
from .schemes import (
    BoundarySpec,
    JumpIntegral,
    Neumann,
    RelaxationParams,
    _check_dt,
    _check_state,
    cfl_dt,
    source_step,
    time_steps,
)


class Kirchhoff:
    """Equality of the one-sided truncated path integrals at the interface."""

    def offset(self, domain):
        return 0.0

    def __repr__(self):
        return "Kirchhoff()"


class ModifiedKirchhoff(Kirchhoff):
    """Kirchhoff conditions shifted by the far-field fluxes F1(U_a^1), F2(U_a^2)."""

    def __init__(self, flux_left, flux_right):
        self.flux_left = np.asarray(flux_left, dtype=float)
        self.flux_right = np.asarray(flux_right, dtype=float)

    @classmethod
    def from_domain(cls, domain):
        return cls(domain.left_model.flux(domain.ua1), domain.right_model.flux(domain.ua2))

    def offset(self, domain):
        return self.flux_left - self.flux_right

    def __repr__(self):
        return f"ModifiedKirchhoff({self.flux_left.tolist()}, {self.flux_right.tolist()})"


class CustomCoupling:
    """User-supplied residual ``fn(domain, sigma_minus, sigma_plus, u0_minus, u0_plus)``."""

    def __init__(self, fn):
        self.fn = fn


@dataclass
class CoupledDomain:
    left_model: object
    right_model: object
    left_grid: Grid1D
    right_grid: Grid1D
    left_params: RelaxationParams
    right_params: RelaxationParams
    ua1: np.ndarray
    ua2: np.ndarray
    kind: object = field(default_factory=Kirchhoff)
    phi: PathFamily = SEGMENT
    quad: object = None
    left_boundary: object = field(default_factory=Neumann)
    right_boundary: object = field(default_factory=Neumann)
    use_closed_form: bool = True
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    debug: bool = False

    def __post_init__(self):
        self.ua1 = np.asarray(self.ua1, dtype=float)
        self.ua2 = np.asarray(self.ua2, dtype=float)
        if self.quad is None:
            self.quad = gauss_lobatto_5()
        if abs(self.left_grid.x_right) > 1e-12 * max(1.0, self.left_grid.length) or abs(
            self.right_grid.x_left
        ) > 1e-12 * max(1.0, self.right_grid.length):
            raise InvalidParam("the coupling interface must sit at x = 0 between both grids")
        self.left_model.check_admissible(self.ua1, "truncation state U_a^1")
        self.right_model.check_admissible(self.ua2, "truncation state U_a^2")
        if isinstance(self.kind, Kirchhoff) and self.left_model.m != self.right_model.m:
            raise InvalidParam("Kirchhoff coupling needs systems of equal size")
        self.I1 = JumpIntegral(self.left_model, self.phi, self.quad, self.use_closed_form)
        self.I2 = JumpIntegral(self.right_model, self.phi, self.quad, self.use_closed_form)
        self.sqrt_lam1 = self.left_params.sqrt_lam
        self.sqrt_lam2 = self.right_params.sqrt_lam

    @property
    def m1(self):
        return self.left_model.m

    @property
    def m2(self):
        return self.right_model.m

    def dt(self):
        return min(
            cfl_dt(self.left_grid.dx, self.left_params.mu, self.left_params.cfl),
            cfl_dt(self.right_grid.dx, self.right_params.mu, self.right_params.cfl),
        )


@dataclass
class InterfaceData:
    sigma_minus: np.ndarray
    sigma_plus: np.ndarray
    u_r: np.ndarray
    v_r: np.ndarray
    u_l: np.ndarray
    v_l: np.ndarray
    iterations: int = 0
    residual_norm: float = 0.0


def p1(domain, u0_minus):
    """Path integral of A_1 from U_a^1 to the left trace."""
    return domain.I1(domain.ua1, u0_minus)


def p2(domain, u0_plus):
    """Path integral of A_2 from the right trace to U_a^2."""
    return domain.I2(u0_plus, domain.ua2)


def _lax_states(domain, sigma_minus, sigma_plus, u0_minus, u0_plus):
    u_r = u0_minus - sigma_minus / domain.sqrt_lam1
    u_l = u0_plus + sigma_plus / domain.sqrt_lam2
    return u_r, u_l


def _residual_batch(domain, X, u0_minus, u0_plus, P1, P2):
    """Kirchhoff residuals for a batch of parameter vectors X = (sigma^-, sigma^+)."""
    m1 = domain.m1
    sm, sp = X[:, :m1], X[:, m1:]
    if isinstance(domain.kind, CustomCoupling):
        return np.stack([domain.kind.fn(domain, a, b, u0_minus, u0_plus) for a, b in zip(sm, sp)])
    u_r, u_l = _lax_states(domain, sm, sp, u0_minus, u0_plus)
    ok = domain.left_model.admissible(u_r) & domain.right_model.admissible(u_l)
    if not ok.all():
        raise NonAdmissibleState("coupling data left the admissible set")
    offset = domain.kind.offset(domain)
    block1 = P1 + sm + P2 - sp + offset
    block2 = P1 + domain.I1(u0_minus, u_r) + P2 + domain.I2(u_l, u0_plus) + offset
    return np.concatenate([block1, block2], axis=1)


def kirchhoff_residual(domain, sigma_minus, sigma_plus, u0_minus, u0_plus):
    """Residual of both coupling blocks for a single (sigma^-, sigma^+)."""
    u0_minus = np.asarray(u0_minus, dtype=float)
    u0_plus = np.asarray(u0_plus, dtype=float)
    X = np.concatenate([np.asarray(sigma_minus, float), np.asarray(sigma_plus, float)])[None, :]
    return _residual_batch(domain, X, u0_minus, u0_plus, p1(domain, u0_minus), p2(domain, u0_plus))[0]


def _interface_data(domain, x, u0_minus, u0_plus, v0_minus, v0_plus, iterations, res):
    m1 = domain.m1
    sm, sp = x[:m1].copy(), x[m1:].copy()
    u_r, u_l = _lax_states(domain, sm, sp, u0_minus, u0_plus)
    return InterfaceData(sm, sp, u_r, v0_minus + sm, u_l, v0_plus + sp, iterations, res)


def solve_riemann(domain, u0_minus, u0_plus, v0_minus=None, v0_plus=None, x0=None):
    """Coupling data for the traces (U_0^-, U_0^+) by Newton's method from sigma = 0.

    ``x0`` replaces the starting point (sigma^-, sigma^+) = 0.

    The V traces default to the single path integrals P1(U_0^-) and
    -P2(U_0^+), which equal the prefix sums T^1_{-1}, T^2_0 for conservative
    systems; the sigma values themselves do not depend on them.
    """
    u0_minus = np.asarray(u0_minus, dtype=float)
    u0_plus = np.asarray(u0_plus, dtype=float)
    P1 = p1(domain, u0_minus)
    P2 = p2(domain, u0_plus)
    if v0_minus is None:
        v0_minus = P1
    if v0_plus is None:
        v0_plus = -P2
    n = domain.m1 + domain.m2
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = _residual_batch(domain, x[None, :], u0_minus, u0_plus, P1, P2)[0]
    norm = np.max(np.abs(r))
    it = 0
    while norm > domain.newton_tol:
        if it >= domain.newton_max_iter:
            raise NoConvergence(it, norm)
        it += 1
        h = 1e-7 * (1.0 + np.abs(x))
        X = x + np.diag(h)
        R = _residual_batch(domain, X, u0_minus, u0_plus, P1, P2)
        J = ((R - r) / h[:, None]).T
        try:
            delta = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise NoConvergence(it, norm) from None
        step = 1.0
        for _ in range(21):
            trial = x + step * delta
            try:
                r_trial = _residual_batch(domain, trial[None, :], u0_minus, u0_plus, P1, P2)[0]
            except NonAdmissibleState:
                step *= 0.5
                continue
            norm_trial = np.max(np.abs(r_trial))
            if norm_trial < norm or norm_trial <= domain.newton_tol:
                break
            step *= 0.5
        else:
            if norm <= 1e3 * domain.newton_tol:
                # stagnation at round-off level
                break
            raise NoConvergence(it, norm)
        x, r, norm = trial, r_trial, norm_trial
    return _interface_data(domain, x, u0_minus, u0_plus, v0_minus, v0_plus, it, norm)


def scan_roots(domain, u0_minus, u0_plus, radius, n=21, n_starts=20, tol=1e-8):
    """Search for all coupling roots in the box |sigma| <= radius.

    The residual norm is sampled on a regular grid, its ``n_starts`` lowest
    local minima seed Newton, and the converged roots are deduplicated.
    Returns (roots, residual_norms); cost grows like n**(m1 + m2).
    """
    u0_minus = np.asarray(u0_minus, dtype=float)
    u0_plus = np.asarray(u0_plus, dtype=float)
    P1, P2 = p1(domain, u0_minus), p2(domain, u0_plus)
    dim = domain.m1 + domain.m2
    axes = [np.linspace(-radius, radius, n)] * dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    norms = np.full(len(pts), np.inf)
    for k in range(0, len(pts), 4096):
        chunk = pts[k:k + 4096]
        u_r, u_l = _lax_states(domain, chunk[:, :domain.m1], chunk[:, domain.m1:], u0_minus, u0_plus)
        ok = domain.left_model.admissible(u_r) & domain.right_model.admissible(u_l)
        if np.any(ok):
            norms[k:k + 4096][ok] = np.max(
                np.abs(_residual_batch(domain, chunk[ok], u0_minus, u0_plus, P1, P2)), axis=1
            )
    grid = norms.reshape((n,) * dim)
    is_min = np.isfinite(grid)
    for ax in range(dim):
        for shift in (1, -1):
            neighbour = np.roll(grid, shift, axis=ax)
            edge = [slice(None)] * dim
            edge[ax] = 0 if shift == 1 else -1
            neighbour[tuple(edge)] = np.inf
            is_min &= grid <= neighbour
    idx = np.flatnonzero(is_min.ravel())
    starts = pts[idx[np.argsort(norms[idx])][:n_starts]]
    roots, res = [], []
    for x0 in starts:
        try:
            data = solve_riemann(domain, u0_minus, u0_plus, x0=x0)
        except (NoConvergence, NonAdmissibleState):
            continue
        x = np.concatenate([data.sigma_minus, data.sigma_plus])
        if np.max(np.abs(x)) > radius or any(np.max(np.abs(x - r)) < tol for r in roots):
            continue
        roots.append(x)
        res.append(data.residual_norm)
    return np.array(roots).reshape(-1, dim), np.array(res)


def blood_inflow(pressure_profile, t, first_interior_state, vessel):
    """Inflow ghost state for a prescribed boundary pressure.

    The area follows from the pressure law; the velocity keeps the outgoing
    Riemann invariant u - 4c(a) of the interior state.
    """
    p = pressure_profile(t) if callable(pressure_profile) else float(pressure_profile)
    a_b = vessel.area_from_pressure(p)
    a_i, u_i = first_interior_state[0], first_interior_state[1]
    if not a_i > 0:
        raise NonAdmissibleState("inflow needs a positive interior area", cell=0, time=t)
    w_out = u_i - 4.0 * vessel.celerity(a_i)
    return np.array([float(a_b), float(w_out + 4.0 * vessel.celerity(a_b))])


def coupled_relaxed_step(domain, left, right, dt=None):
    """Advance both domains by one step of the coupled relaxed scheme.

    Returns (left, right, interface_data).
    """
    if dt is None:
        dt = domain.dt()
    _check_dt(dt, domain.left_grid.dx, domain.left_params)
    _check_dt(dt, domain.right_grid.dx, domain.right_params)
    t = left.time
    u1, u2 = left.u, right.u
    try:
        data = solve_riemann(domain, u1[-1], u2[0])
    except NoConvergence as exc:
        raise NoConvergence(exc.iterations, exc.residual_norm, t, (u1[-1], u2[0])) from None
    if domain.debug:
        h_minus = 0.5 * (data.v_r - data.sigma_minus + data.v_r) - 0.5 * domain.sqrt_lam1 * (data.u_r - u1[-1])
        h_plus = 0.5 * (data.v_l + data.v_l - data.sigma_plus) - 0.5 * domain.sqrt_lam2 * (u2[0] - data.u_l)
        assert np.allclose(h_minus, data.v_r, rtol=0, atol=1e-13)
        assert np.allclose(h_plus, data.v_l, rtol=0, atol=1e-13)

    s1 = domain.sqrt_lam1
    ghost = domain.left_boundary.ghost_u("left", u1[0], t)
    ext = np.vstack([ghost, u1])
    B = domain.I1(ext[:-1], ext[1:])
    diss = 0.5 * s1 * (ext[1:] - ext[:-1])
    d_plus = 0.5 * B + diss
    d_minus = np.empty_like(u1)
    d_minus[:-1] = 0.5 * B[1:] - diss[1:]
    d_minus[-1] = data.sigma_minus
    u1_new = u1 - dt / domain.left_grid.dx * (d_plus + d_minus)

    s2 = domain.sqrt_lam2
    ghost = domain.right_boundary.ghost_u("right", u2[-1], t)
    ext = np.vstack([u2, ghost])
    B = domain.I2(ext[:-1], ext[1:])
    diss = 0.5 * s2 * (ext[1:] - ext[:-1])
    d_minus = 0.5 * B - diss
    d_plus = np.empty_like(u2)
    d_plus[1:] = 0.5 * B[:-1] + diss[:-1]
    d_plus[0] = -data.sigma_plus
    u2_new = u2 - dt / domain.right_grid.dx * (d_plus + d_minus)

    t_new = t + dt
    _check_state(domain.left_model, u1_new, t_new)
    _check_state(domain.right_model, u2_new, t_new)
    left_new = GridSolution(left.grid, u1_new, None, t_new, left.meta)
    right_new = GridSolution(right.grid, u2_new, None, t_new, right.meta)
    left_new = source_step(domain.left_model, dt, left_new)
    right_new = source_step(domain.right_model, dt, right_new)
    return left_new, right_new, data


def solve_coupled(domain, left, right, t_end, dt=None, callback=None):
    """Integrate both domains to ``t_end``; ``callback(n, left, right, data)`` per step."""
    dt = domain.dt() if dt is None else dt
    for n, h in enumerate(time_steps(left.time, t_end, dt)):
        try:
            left, right, data = coupled_relaxed_step(domain, left, right, h)
        except NonAdmissibleState as exc:
            if exc.time is None:
                raise NonAdmissibleState(str(exc), cell=exc.cell, time=left.time) from exc
            raise
        if callback is not None:
            callback(n, left, right, data)
    left.time = right.time = t_end
    return left, right


def coupling_error(domain, left, right):
    """Per-component |P1(U_{-1}) + P2(U_0)| (+ flux offset for modified conditions)."""
    u_minus = left.u[-1] if isinstance(left, GridSolution) else np.asarray(left, float)
    u_plus = right.u[0] if isinstance(right, GridSolution) else np.asarray(right, float)
    err = p1(domain, u_minus) + p2(domain, u_plus)
    if isinstance(domain.kind, Kirchhoff):
        err = err + domain.kind.offset(domain)
    return np.abs(err)


def truncated_T1(domain, u_left, ghost=None):
    """Prefix sums T^1_j over the left domain, anchored at U_a^1 beyond the ghost."""
    ghost = domain.left_boundary.ghost_u("left", u_left[0], 0.0) if ghost is None else ghost
    ext = np.vstack([domain.ua1, ghost, u_left])
    return np.cumsum(domain.I1(ext[:-1], ext[1:]), axis=0)[1:]


def truncated_T2(domain, u_right, ghost=None):
    """Suffix sums T^2_j = -(sum of jumps right of cell j), anchored at U_a^2."""
    ghost = domain.right_boundary.ghost_u("right", u_right[-1], 0.0) if ghost is None else ghost
    ext = np.vstack([u_right, ghost, domain.ua2])
    jumps = domain.I2(ext[:-1], ext[1:])
    return -np.cumsum(jumps[::-1], axis=0)[::-1][: len(u_right)]
