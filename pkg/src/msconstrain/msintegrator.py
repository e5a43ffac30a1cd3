"""Euler box scheme on the full first-order system, tangent propagation and
discrete conservation-law checks.

The wave map equation is written as M z_t + sum_a K_a z_{x_a} = grad S(z)
- lambda grad g(z) on z = (u, v, m) in 1D or z = (u, v, p1, p2) in 2D, with
the classical splitting M = M+ + M- (M+^T = -M-) and likewise for each K_a.
Stepping eliminates to the same constrained-leapfrog update as the reduced
scheme; here the force assembly goes through the assembled block matrices so
the two routes stay independent implementations.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .core import (
    Grid,
    NEUMANN,
    backward_difference,
    check_field,
    forward_difference,
)
from .constraints import DegenerateDirectionError, QuadricConstraint, quadric_lambda
from .wavemap import Potential, zero_potential


class TangentConstraintError(RuntimeError):
    """Tangent data violates the linearized constraint at a stored level."""


def _block(zdim: int, d: int, entries: dict[tuple[int, int], float]) -> np.ndarray:
    """Assemble a zdim x zdim matrix from d x d identity blocks."""
    out = np.zeros((zdim, zdim))
    eye = np.eye(d)
    for (row, col), sign in entries.items():
        out[row * d:(row + 1) * d, col * d:(col + 1) * d] = sign * eye
    return out


@dataclass(frozen=True)
class MSStructure:
    """Block matrices, splitting and gradient data of the wave-map system."""

    target_dim: int
    space_dim: int
    potential: Potential
    constraint: QuadricConstraint
    M: np.ndarray = dc_field(repr=False, default=None)
    M_plus: np.ndarray = dc_field(repr=False, default=None)
    M_minus: np.ndarray = dc_field(repr=False, default=None)
    K: tuple[np.ndarray, ...] = dc_field(repr=False, default=None)
    K_plus: tuple[np.ndarray, ...] = dc_field(repr=False, default=None)
    K_minus: tuple[np.ndarray, ...] = dc_field(repr=False, default=None)

    @property
    def zdim(self) -> int:
        return (2 + self.space_dim) * self.target_dim

    def split(self, z: np.ndarray):
        """Views of the u, v and momentum blocks of node-indexed z vectors."""
        d = self.target_dim
        u = z[..., :d]
        v = z[..., d:2 * d]
        ps = tuple(z[..., (2 + a) * d:(3 + a) * d] for a in range(self.space_dim))
        return u, v, ps

    def S(self, z: np.ndarray) -> np.ndarray:
        u, v, ps = self.split(z)
        out = 0.5 * np.sum(v * v, axis=-1) + self.potential.value(u)
        for p in ps:
            out = out - 0.5 * np.sum(p * p, axis=-1)
        return out

    def grad_S(self, z: np.ndarray) -> np.ndarray:
        u, v, ps = self.split(z)
        parts = [self.potential.gradient(u), v] + [-p for p in ps]
        return np.concatenate(parts, axis=-1)

    def grad_g(self, z: np.ndarray) -> np.ndarray:
        """(u, 0, ..., 0): the projection direction with the factor 2 absorbed."""
        u, _, _ = self.split(z)
        out = np.zeros_like(z)
        out[..., :self.target_dim] = u
        return out


def wave_map_structure(target_dim: int, space_dim: int = 1,
                       potential: Potential | None = None) -> MSStructure:
    """The multi-symplectic blocks of the wave map equation on the unit sphere."""
    if space_dim not in (1, 2):
        raise ValueError("space_dim must be 1 or 2")
    d = target_dim
    zdim = (2 + space_dim) * d
    M_plus = _block(zdim, d, {(0, 1): -1.0})
    M = M_plus + _block(zdim, d, {(1, 0): 1.0})
    Ks, Kps, Kms = [], [], []
    for a in range(space_dim):
        kp = _block(zdim, d, {(0, 2 + a): -1.0})
        km = _block(zdim, d, {(2 + a, 0): 1.0})
        Kps.append(kp)
        Kms.append(km)
        Ks.append(kp + km)
    from .core import BilinearForm

    return MSStructure(
        target_dim=d,
        space_dim=space_dim,
        potential=potential if potential is not None else zero_potential(),
        constraint=QuadricConstraint(BilinearForm.euclidean(d)),
        M=M,
        M_plus=M_plus,
        M_minus=M - M_plus,
        K=tuple(Ks),
        K_plus=tuple(Kps),
        K_minus=tuple(Kms),
    )


def _flux_forward_difference(m: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """delta_x^+ for derivative-like fields: the Neumann ghost is anti-mirrored.

    Backward differences of a mirrored position field are odd under the
    reflection, so the consistent far-end ghost is m_N := -m_{N-1}.
    """
    if grid.boundaries[axis] != NEUMANN:
        return forward_difference(m, grid, axis)
    dx = grid.spacings[axis]
    out = np.empty_like(m)
    sl = [slice(None)] * m.ndim

    def at(idx):
        s = list(sl)
        s[axis] = idx
        return tuple(s)

    out[at(slice(None, -1))] = (m[at(slice(1, None))] - m[at(slice(None, -1))]) / dx
    out[at(-1)] = -2.0 * m[at(-1)] / dx
    return out


@dataclass(frozen=True)
class FullState:
    """One level of the full system plus the u-history the differences need.

    v = backward time difference of u and p_a = -(backward space difference)
    hold exactly by construction after every step.
    """

    grid: Grid
    dt: float
    step_index: int
    u_prev: np.ndarray = dc_field(repr=False)
    u_curr: np.ndarray = dc_field(repr=False)
    v: np.ndarray = dc_field(repr=False)
    p: tuple[np.ndarray, ...] = dc_field(repr=False)
    lam: np.ndarray | None = dc_field(repr=False, default=None)

    @property
    def time(self) -> float:
        return self.step_index * self.dt

    def z(self) -> np.ndarray:
        return np.concatenate((self.u_curr, self.v) + self.p, axis=-1)

    @staticmethod
    def from_levels(grid: Grid, dt: float, step_index: int,
                    u_prev: np.ndarray, u_curr: np.ndarray) -> "FullState":
        u_prev = check_field(u_prev, grid)
        u_curr = check_field(u_curr, grid)
        v = (u_curr - u_prev) / dt
        p = tuple(-backward_difference(u_curr, grid, a) for a in range(grid.dim))
        return FullState(grid, dt, step_index, u_prev, u_curr, v, p)


def _apply(mat: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.einsum("cd,...d->...c", mat, z)


def euler_box_step(state: FullState, ms: MSStructure,
                   check_consistency: bool = False) -> FullState:
    """One step of the Euler box scheme on the full z system.

    The rows of M+ that vanish are algebraic conditions already satisfied by
    the stored backward differences; the u-row advances v, the definitional
    recurrences close the level.
    """
    grid, dt, d = state.grid, state.dt, ms.target_dim
    z = state.z()

    dz_t_minus = np.zeros_like(z)
    dz_t_minus[..., :d] = (state.u_curr - state.u_prev) / dt  # only column M- reads
    w = _apply(ms.M_minus, dz_t_minus)
    for a in range(grid.dim):
        dz_x_plus = np.concatenate(
            [forward_difference(state.u_curr, grid, a),
             forward_difference(state.v, grid, a)]
            + [_flux_forward_difference(p, grid, a) for p in state.p],
            axis=-1,
        )
        dz_x_minus = np.concatenate(
            [backward_difference(state.u_curr, grid, a),
             backward_difference(state.v, grid, a)]
            + [backward_difference(p, grid, a) for p in state.p],
            axis=-1,
        )
        w = w + _apply(ms.K_plus[a], dz_x_plus) + _apply(ms.K_minus[a], dz_x_minus)

    r0 = ms.grad_S(z) - w  # residual row vector before the multiplier force
    if check_consistency:
        rest = r0[..., d:]
        if float(np.max(np.abs(rest))) > 1e-10:
            raise AssertionError("algebraic rows of the box scheme violated")

    # u-row: -dt+ v = r0_u - lam*u, then the v-row at the next level closes u
    r0_u = r0[..., :d]
    u = state.u_curr
    utilde = u + dt * (state.v - dt * r0_u)
    lam_sh = np.asarray(quadric_lambda(u, utilde, ms.constraint.form))
    u_next = utilde + lam_sh[..., None] * u

    v_next = (u_next - u) / dt
    p_next = tuple(-backward_difference(u_next, grid, a) for a in range(grid.dim))
    return FullState(grid, dt, state.step_index + 1, u, u_next, v_next, p_next,
                     lam=np.asarray(lam_sh) / dt**2)


@dataclass(frozen=True)
class TangentField:
    """Two levels of a linearized trajectory; satisfies <u, du> = 0 levelwise."""

    du_prev: np.ndarray = dc_field(repr=False)
    du_curr: np.ndarray = dc_field(repr=False)
    dlam: np.ndarray | None = dc_field(repr=False, default=None)


def check_tangent(state: FullState, tangent: TangentField, ms: MSStructure,
                  tol: float = 1e-11) -> None:
    form = ms.constraint.form
    worst = max(
        float(np.max(np.abs(form.dot(state.u_prev, tangent.du_prev)))),
        float(np.max(np.abs(form.dot(state.u_curr, tangent.du_curr)))),
    )
    if worst > tol:
        raise TangentConstraintError(
            f"linearized constraint violated (max residual {worst:.3e})"
        )


def tangent_step(state: FullState, tangent: TangentField, ms: MSStructure,
                 constrained: bool = True) -> TangentField:
    """Propagate a tangent across one step of the nonlinear scheme.

    The multiplier variation is fixed by the linearized constraint at the new
    level.  ``constrained=False`` drops both multiplier terms (negative
    control for the conservation-law tests).
    """
    if constrained:
        check_tangent(state, tangent, ms)
    if ms.potential.hessian_apply is None:
        raise ValueError("tangent propagation needs a potential with a Hessian")
    grid, dt = state.grid, state.dt
    next_state = euler_box_step(state, ms)
    u, du = state.u_curr, tangent.du_curr
    from .core import laplacian

    dpred = (
        2.0 * du - tangent.du_prev
        + dt**2 * (laplacian(du, grid) - ms.potential.hessian_apply(u, du))
    )
    if not constrained:
        return TangentField(du_prev=du, du_curr=dpred, dlam=None)

    lam_sh = next_state.lam * dt**2
    core = dpred + lam_sh[..., None] * du
    form = ms.constraint.form
    u_next = next_state.u_curr
    denom = form.dot(u_next, u)
    if float(np.min(np.abs(denom))) < 1e-14:
        raise DegenerateDirectionError(
            "linearized multiplier solve singular: projection direction "
            "orthogonal to the new level"
        )
    dlam_sh = -form.dot(u_next, core) / denom
    du_next = core + dlam_sh[..., None] * u
    return TangentField(du_prev=du, du_curr=du_next, dlam=dlam_sh / dt**2)


@dataclass
class TangentHistory:
    """Stacked tangent levels du[k] for k = 0..L over one base trajectory."""

    du: np.ndarray  # (levels, nodes..., d)

    @property
    def levels(self) -> int:
        return self.du.shape[0]


def propagate_with_tangents(state0: FullState, ms: MSStructure,
                            tangents: Sequence[TangentField], n_steps: int,
                            constrained: bool = True,
                            ) -> tuple[list[FullState], list[TangentHistory]]:
    """Run base and tangents in lockstep, returning full histories."""
    states = [state0]
    tans = list(tangents)
    histories = [[t.du_prev.copy(), t.du_curr.copy()] for t in tans]
    state = state0
    for _ in range(n_steps):
        new_tans = [tangent_step(state, t, ms, constrained=constrained) for t in tans]
        state = euler_box_step(state, ms)
        states.append(state)
        for h, t in zip(histories, new_tans):
            h.append(t.du_curr.copy())
        tans = new_tans
    return states, [TangentHistory(np.stack(h)) for h in histories]


def _dz_history(hist: TangentHistory, grid: Grid, dt: float) -> np.ndarray:
    """dz = (du, dv, dm) per level from a du history (1D grids).

    Level k >= 1 carries dv = backward time difference and dm = -(backward
    space difference); returned shape (levels-1, N, 3d).
    """
    du = hist.du
    dv = (du[1:] - du[:-1]) / dt
    dm = np.stack([-backward_difference(du[k], grid, 0) for k in range(1, du.shape[0])])
    return np.concatenate([du[1:], dv, dm], axis=-1)


def discrete_ms_residual(ta: TangentHistory, tb: TangentHistory,
                         grid: Grid, dt: float, ms: MSStructure) -> np.ndarray:
    """Cellwise residual of the discrete multi-symplectic conservation law.

    Evaluates dt+ of the time 2-form plus dx+ of the space 2-form, each the
    two-point wedge <a^{i-1}, M+ b^i> - <b^{i-1}, M+ a^i> (K+ in space with
    the shift in n); exact solutions of the variational scheme null it to
    roundoff.
    """
    if grid.dim != 1 or grid.boundaries[0] != "periodic":
        raise ValueError("conservation-law residuals need a 1D periodic grid")
    if ta.du.shape != tb.du.shape:
        raise ValueError("tangent histories are misaligned")
    dx = grid.spacings[0]
    za = _dz_history(ta, grid, dt)  # levels 1..L
    zb = _dz_history(tb, grid, dt)

    def pair(x, y, mat):
        return np.einsum("...c,cd,...d->...", x, mat, y)

    # omega(i) from (z^{i-1}, z^i): index k of za/zb holds level k+1
    omega = pair(za[:-1], zb[1:], ms.M_plus) - pair(zb[:-1], za[1:], ms.M_plus)
    zam = np.roll(za, 1, axis=1)
    zbm = np.roll(zb, 1, axis=1)
    kappa = pair(zam, zb, ms.K_plus[0]) - pair(zbm, za, ms.K_plus[0])

    dt_omega = (omega[1:] - omega[:-1]) / dt
    # kappa at the omega levels: omega(i) uses levels (i-1, i) -> kappa rows 1..
    kap = kappa[1:-1]
    dx_kappa = (np.roll(kap, -1, axis=1) - kap) / dx
    return dt_omega + dx_kappa


def density_conservation_residual(states: Sequence[FullState], ms: MSStructure,
                                  which: str) -> np.ndarray:
    """Discretized E_t + F_x (energy) or I_t + J_x (momentum) per cell.

    Inner derivatives use the splitting orientation (dt- in time, dx+ in
    space); first-order small on smooth solutions.
    """
    if which not in ("energy", "momentum"):
        raise ValueError("which must be 'energy' or 'momentum'")
    if len(states) < 3:
        raise ValueError("need at least three stored levels")
    grid = states[0].grid
    if grid.dim != 1 or grid.boundaries[0] != "periodic":
        raise ValueError("conservation-law residuals need a 1D periodic grid")
    dt = states[0].dt
    dx = grid.spacings[0]

    def pair(x, y, mat):
        return np.einsum("...c,cd,...d->...", x, mat, y)

    zs = [s.z() for s in states]
    dens_t, flux = [], []
    for k in range(1, len(zs)):
        z = zs[k]
        z_t = (zs[k] - zs[k - 1]) / dt
        z_x = np.concatenate(
            [forward_difference(states[k].u_curr, grid, 0),
             forward_difference(states[k].v, grid, 0),
             _flux_forward_difference(states[k].p[0], grid, 0)],
            axis=-1,
        )
        if which == "energy":
            dens_t.append(ms.S(z) + pair(z_x, z, ms.K_plus[0]))
            flux.append(-pair(z_t, z, ms.K_plus[0]))
        else:
            dens_t.append(-pair(z_x, z, ms.M_plus))
            flux.append(ms.S(z) + pair(z_t, z, ms.M_plus))
    dens_t = np.stack(dens_t)
    flux = np.stack(flux)
    d_dt = (dens_t[1:] - dens_t[:-1]) / dt
    f = flux[:-1]
    d_dx = (np.roll(f, -1, axis=1) - f) / dx
    return d_dt + d_dx
