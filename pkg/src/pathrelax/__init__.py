"""Relaxation schemes for nonconservative hyperbolic systems and their coupling at an interface."""

from .core import (
    SEGMENT,
    Grid1D,
    GridSolution,
    PathFamily,
    Quadrature,
    SegmentPath,
    gauss_lobatto,
    gauss_lobatto_5,
    path_integral,
    reverse_family,
)
from .coupling import (
    CoupledDomain,
    CustomCoupling,
    InterfaceData,
    Kirchhoff,
    ModifiedKirchhoff,
    blood_inflow,
    coupled_relaxed_step,
    coupling_error,
    kirchhoff_residual,
    solve_coupled,
    solve_riemann,
)
from .errors import (
    CFLViolation,
    GridMismatch,
    InvalidParam,
    NoConvergence,
    NonAdmissibleState,
    PathRelaxError,
)
from .models import BloodVessel, SystemModel, TwoLayerSWE, m_term, subchar_check
from .schemes import (
    BoundarySpec,
    JumpIntegral,
    Neumann,
    PrescribedPressure,
    RelaxationParams,
    TruncationGhost,
    apply_boundary,
    cfl_dt,
    cumulative_T,
    fluctuations,
    relaxation_step,
    relaxed_step,
    solve,
    source_step,
)

__version__ = "0.1.0"
