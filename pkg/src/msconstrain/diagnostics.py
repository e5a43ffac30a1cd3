"""Scalar invariants and experiment-level detectors.

The discrete energy uses the backward time difference (the two stored levels)
and forward space differences (the orientation of the splitting); both sums
use fixed nodewise ordering so repeated runs give bit-identical values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BilinearForm, Grid, SimState, forward_difference
from .constraints import ProjectiveConstraint, QuadricConstraint
from .wavemap import Constraint, Potential


class PeriodNotFoundError(RuntimeError):
    pass


class BlowupNotDetectedError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiagnosticsRecord:
    step: int
    time: float
    energy: float
    momentum: float
    constraint_residual: float
    trace_residual: float | None = None
    center_z: float | None = None


def _pair(a: np.ndarray, b: np.ndarray, form: BilinearForm | None):
    """Signature dot for vector fields, real Frobenius pairing for matrix fields."""
    if form is not None:
        return form.dot(a, b)
    return np.sum((a * b.conj()).real, axis=(-2, -1))


def discrete_hamiltonian(state: SimState, form: BilinearForm | None,
                         pot: Potential | None = None) -> float:
    """Sum of kinetic + gradient + potential densities times the cell volume.

    Negative-definite directions of the form make negative energies possible
    (hyperboloid targets).
    """
    grid = state.grid
    ut = state.velocity()
    density = 0.5 * _pair(ut, ut, form)
    for axis in range(grid.dim):
        ux = forward_difference(state.u_curr, grid, axis)
        density = density + 0.5 * _pair(ux, ux, form)
    if pot is not None:
        density = density + pot.value(state.u_curr)
    return float(np.sum(density)) * grid.cell_volume


def discrete_momentum(state: SimState, form: BilinearForm | None):
    """1/2 <u_x, u_t> summed over nodes; scalar in 1D, per-axis vector in 2D."""
    grid = state.grid
    ut = state.velocity()
    comps = []
    for axis in range(grid.dim):
        ux = forward_difference(state.u_curr, grid, axis)
        comps.append(0.5 * float(np.sum(_pair(ux, ut, form))) * grid.cell_volume)
    return comps[0] if grid.dim == 1 else np.array(comps)


def make_record(state: SimState, constraint: Constraint, pot: Potential,
                center_index: tuple[int, ...] | None = None) -> DiagnosticsRecord:
    if isinstance(constraint, QuadricConstraint):
        form = constraint.form
        trace_residual = None
        g_res = constraint.max_residual(state.u_curr)
    else:
        form = None
        trace_residual = float(np.max(constraint.trace_residual(state.u_curr)))
        g_res = constraint.max_residual(state.u_curr)
    mom = discrete_momentum(state, form)
    mom_scalar = float(mom) if np.ndim(mom) == 0 else float(np.linalg.norm(mom))
    center_z = None
    if center_index is not None:
        center_z = float(state.u_curr[center_index][-1].real)
    return DiagnosticsRecord(
        step=state.step_index,
        time=state.time,
        energy=discrete_hamiltonian(state, form, pot),
        momentum=mom_scalar,
        constraint_residual=g_res,
        trace_residual=trace_residual,
        center_z=center_z,
    )


def drift_slope(times, values) -> float:
    """Least-squares slope of the relative error (v - v0)/|v0| against time."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 10:
        raise ValueError("drift slope needs at least 10 samples")
    if v[0] == 0.0:
        raise ValueError("first value is zero; relative error undefined")
    if np.ptp(t) == 0.0:
        raise ValueError("degenerate time series")
    rel = (v - v[0]) / abs(v[0])
    return float(np.polyfit(t, rel, 1)[0])


def _l2_distance(u: np.ndarray, ref: np.ndarray) -> float:
    d = u - ref
    return float(np.sqrt(np.sum((d * np.conj(d)).real)))


def period_detect(snapshots, u_init: np.ndarray) -> float:
    """First return time to the initial state.

    Scans the normalized L2 distance to ``u_init``; after the distance has
    exceeded 10x its first-step value, the first local minimum marks the
    period.
    """
    times = [t for _, t, _ in snapshots] if len(snapshots) and len(snapshots[0]) == 3 \
        else [t for t, _ in snapshots]
    fields = [u for *_, u in snapshots]
    if len(fields) < 3:
        raise PeriodNotFoundError("too few snapshots")
    norm0 = _l2_distance(u_init, np.zeros_like(u_init))
    dist = np.array([_l2_distance(u, u_init) for u in fields]) / norm0

    nonzero = np.nonzero(dist > 0.0)[0]
    if nonzero.size == 0:
        raise PeriodNotFoundError("series never leaves the initial state")
    d_ref = dist[nonzero[0]]
    above = np.nonzero(dist > 10.0 * d_ref)[0]
    if above.size == 0:
        raise PeriodNotFoundError(
            "no period detected: distance never exceeded the departure threshold"
        )
    start = above[0]
    for k in range(max(start, 1), len(dist) - 1):
        if dist[k] < dist[k - 1] and dist[k] <= dist[k + 1]:
            return float(times[k])
    raise PeriodNotFoundError("no period detected: no return within the run")


def blowup_detect(records) -> tuple[float | None, float | None]:
    """Blow-up time estimates: energy maximum and first downward center flip.

    Returns (t_energy_max, t_center_flip); a channel is None when it does not
    fire.  Raises when the energy is monotone and no flip occurs.
    """
    times = np.array([r.time for r in records])
    energy = np.array([r.energy for r in records])
    if times.size < 3:
        raise BlowupNotDetectedError("too few records")

    k = int(np.argmax(energy))
    t_energy = float(times[k]) if 0 < k < times.size - 1 else None

    t_flip = None
    center = [r.center_z for r in records]
    if all(c is not None for c in center):
        center = np.array(center)
        crossing = np.nonzero((center[:-1] >= 0.0) & (center[1:] < 0.0))[0]
        if crossing.size:
            t_flip = float(times[crossing[0] + 1])

    if t_energy is None and t_flip is None:
        raise BlowupNotDetectedError(
            "no blow-up detected: energy is monotone and the center never flips"
        )
    return t_energy, t_flip
