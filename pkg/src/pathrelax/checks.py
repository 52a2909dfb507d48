"""Invariant suite behind the ``check`` subcommand."""

from dataclasses import dataclass

import numpy as np

from .experiments import RunConfig, build_blood_domain, swe_dambreak_state, swe_smooth_state
from .models import BloodVessel, TwoLayerSWE, m_term, subchar_check
from .schemes import JumpIntegral, fluctuations


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool

    def __str__(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.3e} (tol {self.tolerance:.1e})"


def _at_most(name, value, tol):
    return CheckResult(name, float(value), tol, bool(value <= tol))


def _random_states(model, n, rng):
    if isinstance(model, TwoLayerSWE):
        h = rng.uniform(0.2, 1.8, (n, 2))
        q = rng.uniform(-0.5, 0.5, (n, 2))
        return np.column_stack([h[:, 0], q[:, 0], h[:, 1], q[:, 1]])
    return np.column_stack([rng.uniform(3.0, 8.0, n), rng.uniform(-0.3, 0.3, n)])


def run_checks(config: RunConfig, n_samples=1000, seed=0):
    """Subcharacteristic margin, M-term vanishing and fluctuation identities."""
    cfg = config.resolved()
    rng = np.random.default_rng(seed)
    results = []
    if cfg.preset == "blood-coupled":
        domain, left, right = build_blood_domain(8, cfg.alpha, cfg.cfl, cfg.mu_left)
        models = [(domain.left_model, cfg.mu_left, left.u), (domain.right_model, cfg.mu_right, right.u)]
    else:
        model = TwoLayerSWE(flux_jacobian_diagonal=cfg.flux_jacobian_diagonal)
        if cfg.preset == "custom" and cfg.model == "blood":
            model = BloodVessel(alpha=cfg.alpha)
        x = np.linspace(cfg.x_left, cfg.x_right, 64)
        if cfg.preset == "swe-dambreak":
            u0 = swe_dambreak_state(x)
        elif cfg.preset == "swe-smooth":
            u0 = swe_smooth_state(x)
        else:
            u0 = np.array([cfg.state_left, cfg.state_right], dtype=float)
        mu = cfg.mu if cfg.mu is not None else 1.2 * float(np.max(model.max_speed(u0) ** 2))
        models = [(model, mu, u0)]

    for k, (model, mu, u0) in enumerate(models):
        tag = f"{type(model).__name__}[{k}]"
        rep = subchar_check(model, mu, u0)
        results.append(CheckResult(f"{tag} subcharacteristic margin mu - max speed^2", rep.worst_margin, 0.0,
                                   rep.passed))
        integral = JumpIntegral(model)
        sl = np.sqrt(mu)
        ul = _random_states(model, n_samples, rng)
        ur = _random_states(model, n_samples, rng)
        dm, dp = fluctuations(integral, sl, ul, ur)
        jump = integral(ul, ur)
        results.append(_at_most(f"{tag} D- + D+ = path integral", np.max(np.abs(dm + dp - jump)), 1e-14 * max(1.0, np.abs(jump).max())))
        dm, dp = fluctuations(integral, sl, ul, ul)
        results.append(_at_most(f"{tag} D(U, U) = 0", max(np.abs(dm).max(), np.abs(dp).max()), 1e-14))

    vessel = BloodVessel(alpha=1.0)
    states = _random_states(vessel, 100, rng)
    grads = rng.uniform(-1.0, 1.0, (100, 2))
    worst = max(np.abs(m_term(vessel, s, d)).max() for s, d in zip(states, grads))
    results.append(_at_most("M(U) = 0 for the conservative blood model", worst, 1e-5))
    return results


def scan_interface(config: RunConfig, radius=0.2, n=21):
    """Distinct interface roots for a perturbed blood state next to the rest state."""
    from .coupling import scan_roots

    cfg = config.resolved()
    domain, left, right = build_blood_domain(8, cfg.alpha, cfg.cfl, cfg.mu_left)
    u0m = np.array([5.2, 0.01])
    u0p = np.array([5.0, 0.0])
    return scan_roots(domain, u0m, u0p, radius, n)
