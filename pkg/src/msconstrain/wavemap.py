"""Reduced explicit scheme for wave maps: leapfrog predictor + nodewise projection.

One step reads

    utilde = 2 u_i - u_{i-1} + dt^2 (laplacian(u_i) - V'(u_i))
    u_{i+1} = utilde + lambda * u_i     with g(u_{i+1}) = 0,

a constrained-leapfrog (SHAKE-type) update that keeps every node exactly on
the target manifold.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .core import Grid, SimState, check_field, laplacian
from .constraints import (
    ProjectionInfeasibleError,
    ProjectiveConstraint,
    QuadricConstraint,
    project_cp,
    project_quadric,
    quadric_lambda,
)

Constraint = QuadricConstraint | ProjectiveConstraint


class StepFailureError(RuntimeError):
    """A step could not be completed; carries the failing time and nodes."""

    def __init__(self, message: str, time: float, step_index: int, nodes=None):
        super().__init__(message)
        self.time = time
        self.step_index = step_index
        self.nodes = nodes


@dataclass(frozen=True)
class Potential:
    """Smooth potential V(u) with its gradient (and Hessian action, for tangents)."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian_apply: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None


def zero_potential() -> Potential:
    # scalar zero broadcasts over vector- and matrix-valued densities alike
    return Potential(
        name="zero",
        value=lambda u: 0.0,
        gradient=np.zeros_like,
        hessian_apply=lambda u, du: np.zeros_like(du),
    )


def axis_potential(strength: float = 400.0) -> Potential:
    """V(u) = strength * (u1^2 + u2^2): penalizes distance from the u3 axis."""

    def value(u):
        return strength * (u[..., 0] ** 2 + u[..., 1] ** 2)

    def gradient(u):
        g = np.zeros_like(u)
        g[..., 0] = 2.0 * strength * u[..., 0]
        g[..., 1] = 2.0 * strength * u[..., 1]
        return g

    def hessian_apply(u, du):
        h = np.zeros_like(du)
        h[..., 0] = 2.0 * strength * du[..., 0]
        h[..., 1] = 2.0 * strength * du[..., 1]
        return h

    return Potential("axis", value, gradient, hessian_apply)


POTENTIALS: dict[str, Callable[[], Potential]] = {
    "zero": zero_potential,
    "axis": axis_potential,
}


def shake_predictor(state: SimState, pot: Potential) -> np.ndarray:
    """Unconstrained leapfrog prediction of the next level."""
    u = state.u_curr
    return 2.0 * u - state.u_prev + state.dt**2 * (
        laplacian(u, state.grid) - pot.gradient(u)
    )


def shake_step(state: SimState, pot: Potential, constraint: Constraint) -> SimState:
    """Advance one time step; the new level is feasible to projection tolerance."""
    utilde = shake_predictor(state, pot)
    try:
        if isinstance(constraint, QuadricConstraint):
            u_next = project_quadric(state.u_curr, utilde, constraint.form)
        else:
            u_next, _ = project_cp(state.u_curr, utilde, constraint)
    except ProjectionInfeasibleError as exc:
        raise StepFailureError(
            f"projection infeasible at t={state.time + state.dt:.6g} "
            f"(step {state.step_index + 1}): {exc}",
            time=state.time + state.dt,
            step_index=state.step_index + 1,
            nodes=exc.nodes,
        ) from exc
    return SimState(state.grid, state.dt, state.step_index + 1,
                    u_prev=state.u_curr, u_curr=u_next)


def _pairing(constraint: Constraint):
    if isinstance(constraint, QuadricConstraint):
        return lambda a, b: constraint.form.dot(a, b)
    return lambda a, b: np.sum((a * b.conj()).real, axis=(-2, -1))


def start_from_velocity(u0: np.ndarray, v0: np.ndarray, pot: Potential,
                        constraint: Constraint, dt: float, grid: Grid,
                        feas_tol: float = 1e-10, tangency_tol: float = 1e-10) -> SimState:
    """Build the two starting levels from initial position and velocity.

    u1 is the projected symmetric Taylor step
    u0 + dt v0 + dt^2/2 (laplacian(u0) - V'(u0)), which preserves second
    order and time symmetry.
    """
    u0 = check_field(u0, grid)
    v0 = check_field(v0, grid)
    pair = _pairing(constraint)
    if constraint.max_residual(u0) > feas_tol:
        raise ValueError("initial position violates the constraint")
    tangency = float(np.max(np.abs(pair(u0, v0))))
    if tangency > tangency_tol:
        raise ValueError(
            f"initial velocity is not tangent (max |<u0,v0>| = {tangency:.3e})"
        )
    guess = u0 + dt * v0 + 0.5 * dt**2 * (laplacian(u0, grid) - pot.gradient(u0))
    if isinstance(constraint, QuadricConstraint):
        u1 = project_quadric(u0, guess, constraint.form)
    else:
        u1, _ = project_cp(u0, guess, constraint)
    return SimState(grid, dt, 1, u_prev=u0, u_curr=u1)


@dataclass(frozen=True)
class RunConfig:
    """One experiment run: grid resolution, time stepping and parameters.

    ``params`` carries the experiment's initial-condition knobs (winding
    numbers, tilt angle, potential strength, ...); unknown keys are rejected
    by the experiment builders.
    """

    experiment: str
    points: int | tuple[int, ...]
    final_time: float
    courant: float = 0.5
    dt: float | None = None
    params: dict = dc_field(default_factory=dict)
    snapshot_every: int = 0
    diagnostics_every: int = 1

    def resolve_dt(self, grid: Grid) -> float:
        dt = self.dt if self.dt is not None else self.courant * grid.min_spacing
        ratio = dt / grid.min_spacing
        if ratio > 1.0 + 1e-12:
            raise ValueError(f"Courant ratio {ratio:.3f} exceeds 1")
        if ratio > 1.0 / math.sqrt(grid.dim) + 1e-12:
            warnings.warn(
                f"Courant ratio {ratio:.3f} exceeds the {grid.dim}D stability "
                f"guard 1/sqrt({grid.dim})",
                stacklevel=2,
            )
        return dt


class RunSinks:
    """Listener interface for the run loop; default methods discard everything."""

    def on_snapshot(self, step: int, time: float, u: np.ndarray) -> None:
        pass

    def on_record(self, record) -> None:
        pass

    def on_event(self, kind: str, message: str, time: float) -> None:
        pass


class MemorySinks(RunSinks):
    """Collects snapshots, diagnostics records and events in memory."""

    def __init__(self):
        self.snapshots: list[tuple[int, float, np.ndarray]] = []
        self.records: list = []
        self.events: list[tuple[str, str, float]] = []

    def on_snapshot(self, step, time, u):
        self.snapshots.append((step, time, u.copy()))

    def on_record(self, record):
        self.records.append(record)

    def on_event(self, kind, message, time):
        self.events.append((kind, message, time))


@dataclass
class RunResult:
    state: SimState
    status: str  # "ok" or "step-failure"
    steps_completed: int


def run(config: RunConfig, sinks: RunSinks | None = None) -> RunResult:
    """Execute one experiment to its final time, emitting snapshots and records.

    Deterministic for a fixed config.  A projection failure mid-run is
    recorded as an event and stops the loop with the last valid state.
    """
    from . import experiments  # deferred: experiments builds on this module
    from .diagnostics import make_record

    sinks = sinks if sinks is not None else RunSinks()
    prep = experiments.prepare(config)
    state = prep.state
    n_steps = max(0, int(round(config.final_time / state.dt)))

    def emit(st: SimState, force_snapshot: bool) -> None:
        snap_due = config.snapshot_every > 0 and st.step_index % config.snapshot_every == 0
        if force_snapshot or snap_due:
            sinks.on_snapshot(st.step_index, st.time, st.u_curr)
        if st.step_index % max(1, config.diagnostics_every) == 0 or force_snapshot:
            sinks.on_record(make_record(st, prep.constraint, prep.potential,
                                        center_index=prep.center_index))

    emit(state, force_snapshot=True)
    status = "ok"
    start_index = state.step_index
    while state.step_index - start_index < n_steps:
        try:
            state = shake_step(state, prep.potential, prep.constraint)
        except StepFailureError as exc:
            sinks.on_event("step-failure", str(exc), exc.time)
            status = "step-failure"
            break
        last = state.step_index - start_index == n_steps
        emit(state, force_snapshot=last)
    return RunResult(state=state, status=status,
                     steps_completed=state.step_index - start_index)
