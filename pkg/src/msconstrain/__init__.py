"""Constrained multi-symplectic integrators for wave map equations."""

__version__ = "0.1.0"

from .core import BilinearForm, Grid, SimState, laplacian
from .constraints import (
    ProjectionInfeasibleError,
    ProjectiveConstraint,
    QuadricConstraint,
    embed_cp,
    project_cp,
    project_quadric,
    quadric_lambda,
)
from .wavemap import (
    MemorySinks,
    Potential,
    RunConfig,
    RunResult,
    StepFailureError,
    axis_potential,
    run,
    shake_step,
    start_from_velocity,
    zero_potential,
)
from .diagnostics import (
    DiagnosticsRecord,
    blowup_detect,
    discrete_hamiltonian,
    discrete_momentum,
    drift_slope,
    period_detect,
)

__all__ = [
    "BilinearForm", "Grid", "SimState", "laplacian",
    "ProjectionInfeasibleError", "ProjectiveConstraint", "QuadricConstraint",
    "embed_cp", "project_cp", "project_quadric", "quadric_lambda",
    "MemorySinks", "Potential", "RunConfig", "RunResult", "StepFailureError",
    "axis_potential", "run", "shake_step", "start_from_velocity", "zero_potential",
    "DiagnosticsRecord", "blowup_detect", "discrete_hamiltonian",
    "discrete_momentum", "drift_slope", "period_detect",
]
