"""Grids, signature bilinear forms, fields and the shared difference stencils.

Fields are plain numpy arrays whose leading axes enumerate grid nodes and
whose trailing axes hold the ambient value at each node: shape ``(N, d)`` on a
1D grid, ``(N1, N2, d)`` on a 2D grid, or ``(N, k, k)`` complex for
matrix-valued fields.  All arithmetic is float64/complex128.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PERIODIC = "periodic"
NEUMANN = "neumann"

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Grid:
    """Uniform 1D or 2D mesh with a per-axis boundary kind.

    Periodic axes cover ``[origin, origin + length)`` with spacing ``L/N``;
    Neumann axes include both endpoints, spacing ``L/(N-1)``.
    """

    shape: tuple[int, ...]
    lengths: tuple[float, ...]
    boundaries: tuple[str, ...]
    origins: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.shape) not in (1, 2):
            raise ValueError(f"grid must be 1D or 2D, got shape {self.shape}")
        if not (len(self.shape) == len(self.lengths) == len(self.boundaries)):
            raise ValueError("shape, lengths and boundaries must have equal length")
        if not self.origins:
            object.__setattr__(self, "origins", (0.0,) * len(self.shape))
        for n, length, bc in zip(self.shape, self.lengths, self.boundaries):
            if bc not in (PERIODIC, NEUMANN):
                raise ValueError(f"unknown boundary kind {bc!r}")
            if length <= 0.0:
                raise ValueError("axis length must be positive")
            if bc == PERIODIC and n < 2:
                raise ValueError("periodic axes need at least 2 nodes")
            if bc == NEUMANN and n < 3:
                raise ValueError("Neumann axes need at least 3 nodes")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(
            length / n if bc == PERIODIC else length / (n - 1)
            for n, length, bc in zip(self.shape, self.lengths, self.boundaries)
        )

    @property
    def min_spacing(self) -> float:
        return min(self.spacings)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacings)

    def axis_coords(self, axis: int) -> np.ndarray:
        dx = self.spacings[axis]
        return self.origins[axis] + dx * np.arange(self.shape[axis])

    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates as broadcastable meshgrid arrays (ij indexing)."""
        axes = [self.axis_coords(a) for a in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @staticmethod
    def circle(n: int, length: float = TWO_PI) -> "Grid":
        return Grid((n,), (length,), (PERIODIC,))

    @staticmethod
    def torus(n1: int, n2: int | None = None, length: float = TWO_PI) -> "Grid":
        n2 = n1 if n2 is None else n2
        return Grid((n1, n2), (length, length), (PERIODIC, PERIODIC))

    @staticmethod
    def neumann_box(n1: int, n2: int | None = None, length: float = 1.0,
                    origin: float = -0.5) -> "Grid":
        n2 = n1 if n2 is None else n2
        return Grid((n1, n2), (length, length), (NEUMANN, NEUMANN),
                    (origin, origin))


@dataclass(frozen=True)
class BilinearForm:
    """Diagonal signature form on the ambient space: dot(a,b) = sum_k s_k a_k b_k."""

    signature: tuple[int, ...]

    def __post_init__(self):
        if not self.signature or any(s not in (-1, 1) for s in self.signature):
            raise ValueError("signature entries must be +1 or -1")

    @property
    def dim(self) -> int:
        return len(self.signature)

    @property
    def is_euclidean(self) -> bool:
        return all(s == 1 for s in self.signature)

    def dot(self, a: np.ndarray, b: np.ndarray) -> np.ndarray | float:
        """Signature inner product over the last axis; broadcasts over nodes."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape[-1] != self.dim or b.shape[-1] != self.dim:
            raise ValueError(
                f"vector length mismatch: form has dim {self.dim}, "
                f"got {a.shape[-1]} and {b.shape[-1]}"
            )
        sig = np.asarray(self.signature, dtype=float)
        out = np.sum(sig * a * b, axis=-1)
        return float(out) if out.ndim == 0 else out

    @staticmethod
    def euclidean(d: int) -> "BilinearForm":
        return BilinearForm((1,) * d)

    @staticmethod
    def minkowski() -> "BilinearForm":
        """Signature (-,-,+): the form whose unit 'sphere' is the two-sheet hyperboloid."""
        return BilinearForm((-1, -1, 1))


def check_field(f: np.ndarray, grid: Grid) -> np.ndarray:
    f = np.asarray(f)
    if f.shape[: grid.dim] != grid.shape:
        raise ValueError(
            f"field shape {f.shape} does not match grid shape {grid.shape}"
        )
    return f


def _second_difference(f: np.ndarray, axis: int, bc: str) -> np.ndarray:
    """Nodewise u_{n+1} - 2 u_n + u_{n-1} along one grid axis.

    Neumann axes use mirror ghost nodes (u_{-1} := u_1, u_N := u_{N-2}),
    which preserves second order and annihilates constants.
    """
    if bc == PERIODIC:
        return np.roll(f, -1, axis=axis) + np.roll(f, 1, axis=axis) - 2.0 * f
    out = np.empty_like(f)
    inner = [slice(None)] * f.ndim

    def sl(idx):
        s = list(inner)
        s[axis] = idx
        return tuple(s)

    out[sl(slice(1, -1))] = (
        f[sl(slice(2, None))] + f[sl(slice(None, -2))] - 2.0 * f[sl(slice(1, -1))]
    )
    out[sl(0)] = 2.0 * (f[sl(1)] - f[sl(0)])
    out[sl(-1)] = 2.0 * (f[sl(-2)] - f[sl(-1)])
    return out


def laplacian(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Discrete Laplacian: sum over axes of second central differences / dx^2."""
    f = check_field(f, grid)
    out = np.zeros_like(f)
    for axis, (dx, bc) in enumerate(zip(grid.spacings, grid.boundaries)):
        out += _second_difference(f, axis, bc) / dx**2
    return out


def forward_difference(f: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """delta_x^+ along one axis; Neumann axes use the mirror ghost at the far end."""
    f = check_field(f, grid)
    dx = grid.spacings[axis]
    if grid.boundaries[axis] == PERIODIC:
        return (np.roll(f, -1, axis=axis) - f) / dx
    out = np.empty_like(f)
    sl = [slice(None)] * f.ndim

    def at(idx):
        s = list(sl)
        s[axis] = idx
        return tuple(s)

    out[at(slice(None, -1))] = (f[at(slice(1, None))] - f[at(slice(None, -1))]) / dx
    out[at(-1)] = (f[at(-2)] - f[at(-1)]) / dx
    return out


def backward_difference(f: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """delta_x^- along one axis; Neumann axes use the mirror ghost at the near end."""
    f = check_field(f, grid)
    dx = grid.spacings[axis]
    if grid.boundaries[axis] == PERIODIC:
        return (f - np.roll(f, 1, axis=axis)) / dx
    out = np.empty_like(f)
    sl = [slice(None)] * f.ndim

    def at(idx):
        s = list(sl)
        s[axis] = idx
        return tuple(s)

    out[at(slice(1, None))] = (f[at(slice(1, None))] - f[at(slice(None, -1))]) / dx
    out[at(0)] = (f[at(0)] - f[at(1)]) / dx
    return out


@dataclass(frozen=True)
class SimState:
    """Two consecutive time levels of a node-indexed field.

    ``u_prev`` is level i-1, ``u_curr`` level i, with t_i = step_index * dt.
    """

    grid: Grid
    dt: float
    step_index: int
    u_prev: np.ndarray = field(repr=False)
    u_curr: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        check_field(self.u_prev, self.grid)
        check_field(self.u_curr, self.grid)
        if self.u_prev.shape != self.u_curr.shape:
            raise ValueError("both levels must have identical shape")

    @property
    def time(self) -> float:
        return self.step_index * self.dt

    @property
    def courant(self) -> float:
        return self.dt / self.grid.min_spacing

    def velocity(self) -> np.ndarray:
        """Backward time difference (u_curr - u_prev) / dt."""
        return (self.u_curr - self.u_prev) / self.dt
