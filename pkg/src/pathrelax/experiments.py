"""Benchmark presets, L1 errors and the convergence studies built on them."""

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import Grid1D, GridSolution
from .coupling import CoupledDomain, Kirchhoff, coupling_error, solve_coupled
from .errors import GridMismatch, InvalidParam
from .models import BloodVessel, TwoLayerSWE, subchar_check
from .schemes import BoundarySpec, Neumann, PrescribedPressure, RelaxationParams, cfl_dt, solve

PRESETS = ("swe-dambreak", "swe-smooth", "blood-coupled", "custom")
SCHEMES = ("relaxed", "relaxation", "coupled-relaxed")

# Half length of each vessel in the blood-coupled preset.  Pulses travel at
# about 0.1 (left) and 0.045 (right), so longer vessels never carry a wave
# to the interface before t = 12.
BLOOD_HALF_LENGTH = 0.5
BLOOD_A0 = 5.0
BLOOD_H0 = 0.05
BLOOD_E = (0.5, 0.1)
BLOOD_P0 = 2e-3

_DEFAULTS = {
    "swe-dambreak": dict(scheme="relaxed", cfl=0.9, mu=25.0, t_end=0.33, x_left=-5.0, x_right=5.0),
    "swe-smooth": dict(scheme="relaxed", cfl=0.1, mu=25.0, t_end=0.33, x_left=-5.0, x_right=5.0),
    "blood-coupled": dict(
        scheme="coupled-relaxed", cfl=0.9, mu=0.16, t_end=12.0,
        x_left=-BLOOD_HALF_LENGTH, x_right=BLOOD_HALF_LENGTH,
    ),
    "custom": dict(scheme="relaxed", cfl=0.9, x_left=-1.0, x_right=1.0),
}


def _parse_scheme(text):
    """Accept 'relaxed', 'coupled-relaxed', 'relaxation' or 'relaxation(eps)'."""
    text = text.strip()
    if text.startswith("relaxation(") and text.endswith(")"):
        return "relaxation", float(text[len("relaxation("):-1])
    return text, None


@dataclass
class RunConfig:
    """Everything needed to reproduce one run; unset fields take preset defaults."""

    preset: str = "swe-dambreak"
    scheme: Optional[str] = None
    n_cells: int = 1000
    cfl: Optional[float] = None
    mu: Optional[float] = None
    mu_left: Optional[float] = None
    mu_right: Optional[float] = None
    epsilon: Optional[float] = None
    t_end: Optional[float] = None
    alpha: float = 4.0 / 3.0
    x_left: Optional[float] = None
    x_right: Optional[float] = None
    # custom preset: Riemann data for a single domain
    model: str = "swe"
    state_left: Optional[tuple] = None
    state_right: Optional[tuple] = None
    x_jump: float = 0.0
    flux_jacobian_diagonal: bool = False
    out: str = "out"
    debug: bool = False

    def resolved(self):
        """Copy with preset defaults filled in and the scheme string normalised."""
        if self.preset not in PRESETS:
            raise InvalidParam(f"unknown preset {self.preset!r}; choose from {', '.join(PRESETS)}")
        cfg = dataclasses.replace(self)
        for key, value in _DEFAULTS[self.preset].items():
            if getattr(cfg, key) is None:
                setattr(cfg, key, value)
        scheme, eps = _parse_scheme(cfg.scheme)
        cfg.scheme = scheme
        if eps is not None:
            cfg.epsilon = eps
        if cfg.preset == "blood-coupled":
            cfg.mu_left = cfg.mu if cfg.mu_left is None else cfg.mu_left
            cfg.mu_right = cfg.mu if cfg.mu_right is None else cfg.mu_right
        cfg.validate()
        return cfg

    def validate(self):
        if self.scheme not in SCHEMES:
            raise InvalidParam(f"unknown scheme {self.scheme!r}; choose from relaxed, relaxation(eps), coupled-relaxed")
        coupled = self.preset == "blood-coupled"
        if coupled != (self.scheme == "coupled-relaxed"):
            raise InvalidParam(f"scheme {self.scheme!r} cannot be used with preset {self.preset!r}")
        if self.scheme == "relaxation" and self.epsilon is None:
            raise InvalidParam("the relaxation scheme needs epsilon")
        if not (isinstance(self.n_cells, (int, np.integer)) and self.n_cells > 0):
            raise InvalidParam(f"n_cells must be a positive integer, got {self.n_cells!r}")
        for name in ("cfl", "mu", "mu_left", "mu_right", "epsilon", "t_end", "alpha"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise InvalidParam(f"{name} must be positive, got {value!r}")
        if self.cfl > 1:
            raise InvalidParam(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.t_end is None:
            raise InvalidParam("t_end is required for the custom preset")
        if not self.x_left < self.x_right:
            raise InvalidParam("x_left must be smaller than x_right")
        if coupled and not (self.x_left < 0 < self.x_right):
            raise InvalidParam("the coupled domain must contain the interface x = 0")
        if self.preset == "custom":
            if self.model not in ("swe", "blood"):
                raise InvalidParam(f"custom model must be swe or blood, got {self.model!r}")
            m = 4 if self.model == "swe" else 2
            for name in ("state_left", "state_right"):
                state = getattr(self, name)
                if state is None or len(state) != m:
                    raise InvalidParam(f"custom preset needs {name} with {m} components")

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class RunResult:
    config: RunConfig
    columns: list
    table: np.ndarray
    dt: float
    dx: tuple
    steps: int
    wall_time: float
    solutions: tuple
    extras: dict = field(default_factory=dict)

    def metadata(self):
        return {
            "config": self.config.to_dict(),
            "dx": list(self.dx),
            "dt": self.dt,
            "steps": self.steps,
            "wall_time_s": self.wall_time,
            "columns": self.columns,
            **self.extras,
        }


# -- initial data ---------------------------------------------------------


def swe_dambreak_state(x):
    h1 = np.where(x < 0, 0.2, 1.8)
    zero = np.zeros_like(x)
    return np.column_stack([h1, zero, 2.0 - h1, zero])


def swe_smooth_state(x):
    h2 = 0.2 + 1.6 / (1.0 + np.exp(-5.0 * x))
    zero = np.zeros_like(x)
    return np.column_stack([2.0 - h2, zero, h2, zero])


def blood_vessels(alpha=4.0 / 3.0):
    """Left (stiffer) and right vessel of the blood-coupled experiment."""
    return tuple(BloodVessel.from_wall(E, BLOOD_H0, BLOOD_A0, alpha=alpha) for E in BLOOD_E)


def build_blood_domain(n_cells, alpha=4.0 / 3.0, cfl=0.9, mu=0.16, half_length=BLOOD_HALF_LENGTH,
                       mu_right=None, debug=False):
    """Coupled vessels on (-L, 0) and (0, L) at rest; returns (domain, left, right)."""
    v1, v2 = blood_vessels(alpha)
    g1 = Grid1D.from_bounds(-half_length, 0.0, n_cells)
    g2 = Grid1D.from_bounds(0.0, half_length, n_cells)
    p1 = RelaxationParams.from_mu(mu, 2, cfl=cfl, debug=debug)
    p2 = RelaxationParams.from_mu(mu if mu_right is None else mu_right, 2, cfl=cfl, debug=debug)
    ua = np.array([BLOOD_A0, 0.0])
    domain = CoupledDomain(
        v1, v2, g1, g2, p1, p2, ua, ua, kind=Kirchhoff(),
        left_boundary=PrescribedPressure(v1, BLOOD_P0), right_boundary=Neumann(), debug=debug,
    )
    rest = np.tile(ua, (n_cells, 1))
    return domain, GridSolution(g1, rest), GridSolution(g2, rest)


def _single_model(cfg):
    if cfg.preset.startswith("swe") or cfg.model == "swe":
        return TwoLayerSWE(flux_jacobian_diagonal=cfg.flux_jacobian_diagonal)
    return BloodVessel(alpha=cfg.alpha)


def _single_initial(cfg, x):
    if cfg.preset == "swe-dambreak":
        return swe_dambreak_state(x)
    if cfg.preset == "swe-smooth":
        return swe_smooth_state(x)
    left = np.asarray(cfg.state_left, dtype=float)
    right = np.asarray(cfg.state_right, dtype=float)
    return np.where((x < cfg.x_jump)[:, None], left, right)


def _default_mu(model, u0):
    # 20% margin over the squared speeds of the initial data
    speed_sq = float(np.max(np.asarray(model.max_speed(u0)) ** 2))
    return float(1.2 * speed_sq) if speed_sq > 0 else 1.0


# -- runs -----------------------------------------------------------------


def simulate(config):
    """Run one configuration and return the tabulated final state."""
    cfg = config.resolved()
    t0 = time.perf_counter()
    if cfg.scheme == "coupled-relaxed":
        domain, left, right = build_blood_domain(
            cfg.n_cells, cfg.alpha, cfg.cfl, cfg.mu_left, -cfg.x_left, cfg.mu_right, cfg.debug
        )
        if cfg.x_right != -cfg.x_left:
            g2 = Grid1D.from_bounds(0.0, cfg.x_right, cfg.n_cells)
            domain = dataclasses.replace(domain, right_grid=g2)
            right = GridSolution(g2, right.u)
        dt = domain.dt()
        steps = [0]
        left, right = solve_coupled(domain, left, right, cfg.t_end,
                                    callback=lambda n, *_: steps.__setitem__(0, n + 1))
        columns = ["x", "a", "u", "Q", "p"]
        rows = []
        for sol, vessel in ((left, domain.left_model), (right, domain.right_model)):
            a, u = sol.u[:, 0], sol.u[:, 1]
            rows.append(np.column_stack([sol.grid.centers, a, u, a * u, vessel.pressure(a)]))
        err = coupling_error(domain, left, right)
        return RunResult(
            cfg, columns, np.vstack(rows), dt, (domain.left_grid.dx, domain.right_grid.dx), steps[0],
            time.perf_counter() - t0, (left, right),
            {"coupling_error": err.tolist(), "interface": 0.0,
             "domain": [cfg.x_left, cfg.x_right], "boundary": "prescribed pressure left, Neumann right"},
        )

    model = _single_model(cfg)
    grid = Grid1D.from_bounds(cfg.x_left, cfg.x_right, cfg.n_cells)
    u0 = _single_initial(cfg, grid.centers)
    model.check_admissible(u0, "initial state")
    mu = cfg.mu if cfg.mu is not None else _default_mu(model, u0)
    report = subchar_check(model, mu, u0)
    if not report.passed:
        raise InvalidParam(f"mu={mu:g} violates the subcharacteristic condition: {report}")
    params = RelaxationParams.from_mu(mu, model.m, cfl=cfg.cfl, epsilon=cfg.epsilon, debug=cfg.debug)
    dt = cfl_dt(grid.dx, mu, cfg.cfl)
    steps = [0]
    sol = solve(model, params, GridSolution(grid, u0), cfg.t_end, scheme=cfg.scheme,
                boundary=BoundarySpec(), callback=lambda n, s: steps.__setitem__(0, n + 1))
    names = ["h1", "q1", "h2", "q2"] if isinstance(model, TwoLayerSWE) else ["a", "u"]
    return RunResult(
        cfg, ["x"] + names, np.column_stack([grid.centers, sol.u]), dt, (grid.dx,), steps[0],
        time.perf_counter() - t0, (sol,),
        {"mu": mu, "domain": [cfg.x_left, cfg.x_right], "boundary": "Neumann"},
    )


# -- errors ---------------------------------------------------------------


def coarsen(sol, n_cells):
    """Block-average a solution onto ``n_cells`` cells of the same domain."""
    n = sol.grid.n_cells
    if n % n_cells or (n // n_cells) & (n // n_cells - 1):
        raise GridMismatch(f"cannot coarsen {n} cells to {n_cells}: ratio is not a power of two")
    k = n // n_cells
    grid = Grid1D(sol.grid.x_left, sol.grid.dx * k, n_cells)
    return GridSolution(grid, sol.u.reshape(n_cells, k, -1).mean(axis=1), time=sol.time)


def l1_error(sol_a, sol_b):
    """Per-component dx * sum |a - b|, coarsening the finer solution if needed."""
    ga, gb = sol_a.grid, sol_b.grid
    if not (math.isclose(ga.x_left, gb.x_left, abs_tol=1e-12)
            and math.isclose(ga.x_right, gb.x_right, rel_tol=1e-12, abs_tol=1e-12)):
        raise GridMismatch("solutions live on different domains")
    if ga.n_cells > gb.n_cells:
        sol_a = coarsen(sol_a, gb.n_cells)
    elif gb.n_cells > ga.n_cells:
        sol_b = coarsen(sol_b, ga.n_cells)
    if sol_a.u.shape != sol_b.u.shape:
        raise GridMismatch("solutions have different numbers of components")
    return sol_a.grid.dx * np.sum(np.abs(sol_a.u - sol_b.u), axis=0)


@dataclass
class ErrorReport:
    """Error table with EOC = log2(E_k / E_{k+1}); the first row has no EOC."""

    label: str
    values: list
    components: list
    errors: np.ndarray
    eoc: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def columns(self):
        cols = [self.label]
        for c in self.components:
            cols += [c, f"eoc_{c}"]
        return cols

    def rows(self):
        """Table rows; the missing first-row EOCs are None."""
        out = []
        for k, value in enumerate(self.values):
            row = [value]
            for c in range(len(self.components)):
                row += [self.errors[k, c], None if k == 0 else self.eoc[k - 1, c]]
            out.append(row)
        return out

    def __str__(self):
        lines = ["  ".join(f"{c:>12}" for c in self.columns)]
        for row in self.rows():
            lines.append("  ".join(
                f"{'':>12}" if v is None else (f"{v:>12.4g}" if isinstance(v, float) else f"{v!s:>12}")
                for v in row))
        return "\n".join(lines)


def eoc(errors, values=None, label="level", components=None):
    """Experimental orders of convergence of consecutive error rows."""
    E = np.asarray(errors, dtype=float)
    if E.ndim == 1:
        E = E[:, None]
    if E.shape[0] < 2:
        raise InvalidParam("eoc needs at least two error rows")
    if not np.all(np.isfinite(E)) or np.any(E <= 0):
        raise InvalidParam("eoc needs positive errors")
    rates = np.log2(E[:-1] / E[1:])
    values = list(range(E.shape[0])) if values is None else list(values)
    components = [f"e{k + 1}" for k in range(E.shape[1])] if components is None else list(components)
    return ErrorReport(label, values, components, E, rates)


# -- studies --------------------------------------------------------------


def _swe_smooth_solution(n_cells, cfl, t_end, scheme="relaxed", epsilon=None):
    cfg = RunConfig(preset="swe-smooth", n_cells=n_cells, cfl=cfl, t_end=t_end,
                    scheme=scheme, epsilon=epsilon)
    return simulate(cfg).solutions[0]


def eps_study(n_cells=1000, exponents: Sequence[int] = (7, 8, 9, 10), cfl=0.1, t_end=0.33):
    """L1 distance of the relaxation scheme from the relaxed scheme as eps = 2^-k shrinks."""
    t0 = time.perf_counter()
    ref = _swe_smooth_solution(n_cells, cfl, t_end)
    errs = []
    for k in exponents:
        sol = _swe_smooth_solution(n_cells, cfl, t_end, "relaxation", 2.0 ** -k)
        e = l1_error(sol, ref)
        errs.append([e[0], e[2]])
    eps = [2.0 ** -k for k in exponents]
    report = eoc(errs, eps, "epsilon", ["E_rel_h1", "E_rel_h2"])
    report.meta = {"preset": "swe-smooth", "n_cells": n_cells, "cfl": cfl, "t_end": t_end,
                   "reference": "relaxed scheme on the same grid",
                   "wall_time_s": time.perf_counter() - t0}
    return report


def grid_study(ns: Sequence[int] = (250, 500, 1000, 2000), n_ref=4000, cfl=0.1, t_end=0.33):
    """L1 error of the relaxed scheme against a fine-grid relaxed solution."""
    t0 = time.perf_counter()
    ref = _swe_smooth_solution(n_ref, cfl, t_end)
    errs = []
    for n in ns:
        e = l1_error(_swe_smooth_solution(n, cfl, t_end), ref)
        errs.append([e[0], e[2]])
    report = eoc(errs, list(ns), "n_cells", ["E_N_h1", "E_N_h2"])
    report.meta = {"preset": "swe-smooth", "cfl": cfl, "t_end": t_end, "n_ref": n_ref,
                   "reference": f"relaxed scheme on {n_ref} cells, block-averaged",
                   "wall_time_s": time.perf_counter() - t0}
    return report


def coupling_study(ns: Sequence[int] = (250, 500, 1000), alpha=4.0 / 3.0, cfl=0.02, t_end=12.0,
                   half_length=BLOOD_HALF_LENGTH, mu=0.16):
    """Coupling errors of the blood-coupled run at t_end under mesh refinement."""
    t0 = time.perf_counter()
    errs = []
    for n in ns:
        domain, left, right = build_blood_domain(n, alpha, cfl, mu, half_length)
        left, right = solve_coupled(domain, left, right, t_end)
        errs.append(coupling_error(domain, left, right))
    report = eoc(errs, list(ns), "n_cells", ["E_psi_1", "E_psi_2"])
    report.meta = {"preset": "blood-coupled", "alpha": alpha, "cfl": cfl, "t_end": t_end, "mu": mu,
                   "domain": [-half_length, half_length], "wall_time_s": time.perf_counter() - t0}
    return report
