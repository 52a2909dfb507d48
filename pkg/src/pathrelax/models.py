"""System models A(U) and diagnostics for stability and consistency."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParam, NonAdmissibleState


class SystemModel:
    """Interface for a nonconservative system dU/dt + A(U) dU/dx = S(U).

    All methods accept states with arbitrary leading batch axes.
    """

    m: int = 0
    conservative: bool = False
    has_closed_form: bool = False
    has_source: bool = False

    def matrix(self, U):
        raise NotImplementedError

    def flux(self, U):
        raise InvalidParam(f"{type(self).__name__} has no flux function")

    def source(self, U):
        return np.zeros_like(np.asarray(U, dtype=float))

    def max_speed(self, U):
        raise NotImplementedError

    def admissible(self, U):
        raise NotImplementedError

    def closed_form_path_integral(self, U1, U2):
        raise InvalidParam(f"{type(self).__name__} has no closed-form path integral")

    def check_admissible(self, U, what="state"):
        ok = np.asarray(self.admissible(U))
        if not np.all(ok):
            idx = np.argwhere(~ok)
            cell = int(idx[0][0]) if idx.size and ok.ndim > 0 else None
            raise NonAdmissibleState(f"{type(self).__name__}: non-admissible {what}", cell=cell)


@dataclass(frozen=True)
class TwoLayerSWE(SystemModel):
    """Two superimposed shallow layers over a flat bottom, state (h1, q1, h2, q2).

    By default the momentum-advection diagonal entries are 2 q_i^2 / h_i^2 as
    in the reference system matrix; ``flux_jacobian_diagonal=True`` uses the
    flux-Jacobian entries 2 q_i / h_i instead.
    """

    g: float = 9.81
    r: float = 0.9
    flux_jacobian_diagonal: bool = False

    m = 4

    def admissible(self, U):
        U = np.asarray(U, dtype=float)
        return (U[..., 0] > 0) & (U[..., 2] > 0) & np.all(np.isfinite(U), axis=-1)

    def matrix(self, U):
        U = np.asarray(U, dtype=float)
        self.check_admissible(U)
        h1, q1, h2, q2 = U[..., 0], U[..., 1], U[..., 2], U[..., 3]
        u1 = q1 / h1
        u2 = q2 / h2
        A = np.zeros(U.shape[:-1] + (4, 4))
        A[..., 0, 1] = 1.0
        A[..., 1, 0] = -u1 * u1 + self.g * h1
        A[..., 1, 1] = 2.0 * u1 if self.flux_jacobian_diagonal else 2.0 * u1 * u1
        A[..., 1, 2] = self.g * h1
        A[..., 2, 3] = 1.0
        A[..., 3, 0] = self.r * self.g * h2
        A[..., 3, 2] = -u2 * u2 + self.g * h2
        A[..., 3, 3] = 2.0 * u2 if self.flux_jacobian_diagonal else 2.0 * u2 * u2
        return A

    def max_speed(self, U):
        U = np.asarray(U, dtype=float)
        self.check_admissible(U)
        h = U[..., 0] + U[..., 2]
        return np.abs(U[..., 1] + U[..., 3]) / h + np.sqrt(self.g * h)


@dataclass(frozen=True)
class BloodVessel(SystemModel):
    """Reduced 1D blood flow model in (area, velocity) with pressure beta (sqrt(a) - sqrt(a0))."""

    alpha: float = 1.0
    beta: float = 0.5 * 0.05 * np.sqrt(np.pi) / 5.0
    rho: float = 1.0
    k_r: float = 8.0 * np.pi * 1e-4
    a0: float = 5.0

    m = 2
    has_closed_form = True

    def __post_init__(self):
        if not (self.beta > 0 and self.rho > 0 and self.a0 > 0):
            raise InvalidParam("beta, rho and a0 must be positive")

    @classmethod
    def from_wall(cls, young_modulus, h0, a0=5.0, **kwargs):
        beta = young_modulus * h0 * np.sqrt(np.pi) / a0
        return cls(beta=beta, a0=a0, **kwargs)

    @property
    def conservative(self):
        return self.alpha == 1.0

    @property
    def has_source(self):
        return self.k_r != 0.0

    def admissible(self, U):
        U = np.asarray(U, dtype=float)
        return (U[..., 0] > 0) & np.isfinite(U[..., 0]) & np.isfinite(U[..., 1])

    def matrix(self, U):
        U = np.asarray(U, dtype=float)
        self.check_admissible(U)
        a, u = U[..., 0], U[..., 1]
        A = np.empty(U.shape[:-1] + (2, 2))
        A[..., 0, 0] = u
        A[..., 0, 1] = a
        A[..., 1, 0] = (self.alpha - 1.0) * u * u + self.beta / (2.0 * self.rho * np.sqrt(a))
        A[..., 1, 1] = (2.0 * self.alpha - 1.0) * u
        return A

    def flux(self, U):
        if not self.conservative:
            raise InvalidParam("the blood model is conservative only for alpha = 1")
        U = np.asarray(U, dtype=float)
        self.check_admissible(U)
        a, u = U[..., 0], U[..., 1]
        return np.stack([a * u, 0.5 * u * u + self.pressure(a) / self.rho], axis=-1)

    def source(self, U):
        U = np.asarray(U, dtype=float)
        S = np.zeros_like(U)
        S[..., 1] = -self.k_r * U[..., 1] / U[..., 0]
        return S

    def max_speed(self, U):
        U = np.asarray(U, dtype=float)
        self.check_admissible(U)
        a, u = U[..., 0], U[..., 1]
        am1 = self.alpha - 1.0
        disc = am1 * am1 * u * u + am1 * a * u * u + self.beta * np.sqrt(a) / (2.0 * self.rho)
        return np.abs(self.alpha * u) + np.sqrt(np.maximum(disc, 0.0))

    def pressure(self, a):
        a = np.asarray(a, dtype=float)
        if np.any(a <= 0):
            raise NonAdmissibleState("pressure needs a positive area")
        return self.beta * (np.sqrt(a) - np.sqrt(self.a0))

    def area_from_pressure(self, p):
        p = np.asarray(p, dtype=float)
        root = np.sqrt(self.a0) + p / self.beta
        if np.any(root <= 0):
            raise NonAdmissibleState(f"pressure {p} below the collapse pressure {-self.beta * np.sqrt(self.a0)}")
        return root * root

    def celerity(self, a):
        """Characteristic celerity of the alpha = 1 system, sqrt(beta/(2 rho)) a^(1/4)."""
        return np.sqrt(self.beta / (2.0 * self.rho)) * np.asarray(a, dtype=float) ** 0.25

    def closed_form_path_integral(self, U1, U2):
        # exact for segment paths; the cubic quotient is kept in factored form
        U1 = np.asarray(U1, dtype=float)
        U2 = np.asarray(U2, dtype=float)
        a1, u1 = U1[..., 0], U1[..., 1]
        a2, u2 = U2[..., 0], U2[..., 1]
        if not ((a1 > 0).all() and (a2 > 0).all()):
            raise NonAdmissibleState("closed-form path integral needs positive areas")
        da = a2 - a1
        out = np.empty(np.broadcast_shapes(U1.shape, U2.shape))
        out[..., 0] = 0.5 * ((u2 + u1) * da + (a2 + a1) * (u2 - u1))
        out[..., 1] = (
            (self.alpha - 1.0) / 3.0 * (u2 * u2 + u1 * u2 + u1 * u1) * da
            + self.beta / self.rho * (np.sqrt(a2) - np.sqrt(a1))
            + (2.0 * self.alpha - 1.0) / 2.0 * (u2 * u2 - u1 * u1)
        )
        return out


def fd_step(U):
    return 1e-6 * np.maximum(1.0, np.abs(U))


def matrix_partials(model, U):
    """Central differences dA[l, k, j] = d a_kj / d U_l."""
    U = np.asarray(U, dtype=float)
    h = fd_step(U)
    dA = np.empty((model.m, model.m, model.m))
    for ell in range(model.m):
        e = np.zeros(model.m)
        e[ell] = h[ell]
        dA[ell] = (model.matrix(U + e) - model.matrix(U - e)) / (2.0 * h[ell])
    return dA


def m_term(model, U, dxU):
    """Second-order correction term of the relaxation limit for one state.

    Component k is sum over i, j, l of dU_i dU_j a_li (d_j a_kl - d_l a_kj);
    it vanishes identically for conservative systems.
    """
    U = np.asarray(U, dtype=float)
    d = np.asarray(dxU, dtype=float)
    model.check_admissible(U)
    if not np.any(d):
        return np.zeros(model.m)
    A = model.matrix(U)
    dA = matrix_partials(model, U)
    first = np.einsum("i,j,li,jkl->k", d, d, A, dA)
    second = np.einsum("i,j,li,lkj->k", d, d, A, dA)
    return first - second


@dataclass
class SubcharReport:
    passed: bool
    mu: float
    worst_margin: float
    worst_index: Optional[int]
    worst_speed_sq: float

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"subcharacteristic check {verdict}: mu={self.mu:g}, "
            f"max squared speed={self.worst_speed_sq:.6g}, worst margin={self.worst_margin:.6g}"
        )


def subchar_check(model, mu, sample_states):
    """Check mu >= max_speed(U)^2 on every sample; ``mu`` may be a diagonal."""
    mu_min = float(np.min(mu))
    states = np.atleast_2d(np.asarray(sample_states, dtype=float))
    speed_sq = np.asarray(model.max_speed(states)) ** 2
    margins = mu_min - speed_sq
    k = int(np.argmin(margins))
    return SubcharReport(
        passed=bool(np.all(margins >= 0)),
        mu=mu_min,
        worst_margin=float(margins[k]),
        worst_index=k,
        worst_speed_sq=float(speed_sq[k]),
    )
