"""Initial conditions, reference solutions and the named experiment registry.

Domain conventions: the 2D torus experiments live on [0, 2pi)^2 where the
analytic circle solution takes its textbook form; the 1D circle experiments
(breather, potential, hyperbolic) live on the unit-circumference circle with
dx = 1/N, the convention under which the reported initial energies
(2 pi^2 l^2 = 967 for the breather) come out; initial-data formulas are
written in the angle theta = 2 pi x / L so they read the same either way.
The blow-up experiment uses the square [-1/2, 1/2]^2 with homogeneous
Neumann boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .core import TWO_PI, BilinearForm, Grid, SimState
from .constraints import ProjectiveConstraint, QuadricConstraint, embed_cp, project_quadric
from .wavemap import (
    Constraint,
    Potential,
    RunConfig,
    axis_potential,
    start_from_velocity,
    zero_potential,
)


class ConfigError(ValueError):
    """Invalid or unknown experiment configuration."""


def circle_angles(grid: Grid) -> np.ndarray:
    """Angular coordinate theta in [0, 2pi) of a periodic 1D grid."""
    if grid.dim != 1 or grid.boundaries[0] != "periodic":
        raise ConfigError("angular coordinates need a periodic 1D grid")
    x = grid.axis_coords(0)
    return TWO_PI * (x - grid.origins[0]) / grid.lengths[0]


# --- torus-to-circle analytic solution (convergence & energy studies) -------

@dataclass(frozen=True)
class ModeSpec:
    wavenumber: tuple[int, int]
    amplitude: float
    phase: float

    @property
    def frequency(self) -> float:
        return math.hypot(*self.wavenumber)


TABLE1_MODES: tuple[ModeSpec, ...] = (
    ModeSpec((1, 1), 1.0, 0.0),
    ModeSpec((2, 1), 0.5, 0.5),
    ModeSpec((-1, 1), 0.2, 0.8),
)


def _theta_and_rate(modes: Sequence[ModeSpec], x1, x2, t: float):
    theta = np.zeros(np.broadcast(x1, x2).shape)
    rate = np.zeros_like(theta)
    for m in modes:
        k1, k2 = m.wavenumber
        arg = k1 * x1 + k2 * x2 - m.frequency * t - m.phase
        theta = theta + m.amplitude * np.cos(arg)
        rate = rate + m.amplitude * m.frequency * np.sin(arg)
    return theta, rate


def analytic_circle_solution(modes: Sequence[ModeSpec], x1, x2, t: float) -> np.ndarray:
    """Exact circle-valued wave map (cos theta, sin theta) with theta a
    superposition of plane waves; unit norm by construction."""
    theta, _ = _theta_and_rate(modes, x1, x2, t)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def analytic_circle_velocity(modes: Sequence[ModeSpec], x1, x2, t: float) -> np.ndarray:
    theta, rate = _theta_and_rate(modes, x1, x2, t)
    return rate[..., None] * np.stack([-np.sin(theta), np.cos(theta)], axis=-1)


# --- convergence study -------------------------------------------------------

@dataclass
class StudyResult:
    ns: list[int]
    errors: list[float]
    slope: float
    courant: float
    final_time: float


def convergence_study(ns: Sequence[int], courant: float, final_time: float,
                      modes: Sequence[ModeSpec] = TABLE1_MODES) -> StudyResult:
    """Max-over-time L2 errors against the analytic torus solution, per N,
    with the fitted log-log order."""
    from .wavemap import shake_step

    ns = list(ns)
    if sorted(ns) != ns or len(set(ns)) != len(ns):
        raise ConfigError("N values must be strictly increasing")
    errors = []
    for n in ns:
        grid = Grid.torus(n)
        x1, x2 = grid.coords()
        dt = courant * grid.min_spacing
        constraint = QuadricConstraint(BilinearForm.euclidean(2))
        pot = zero_potential()
        u0 = analytic_circle_solution(modes, x1, x2, 0.0)
        v0 = analytic_circle_velocity(modes, x1, x2, 0.0)
        state = start_from_velocity(u0, v0, pot, constraint, dt, grid)
        n_steps = int(round(final_time / dt))
        worst = 0.0
        vol = grid.cell_volume
        for _ in range(n_steps):
            state = shake_step(state, pot, constraint)
            exact = analytic_circle_solution(modes, x1, x2, state.time)
            err = math.sqrt(float(np.sum((state.u_curr - exact) ** 2)) * vol)
            worst = max(worst, err)
        errors.append(worst)
    if any(e == 0.0 for e in errors):
        raise ConfigError("zero error in convergence study; slope undefined")
    slope = -float(np.polyfit(np.log(np.asarray(ns, float)), np.log(errors), 1)[0])
    return StudyResult(ns=ns, errors=errors, slope=slope,
                       courant=courant, final_time=final_time)


def fit_order(ns: Sequence[int], errors: Sequence[float]) -> float:
    """Least-squares order of convergence from (N, error) samples."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= 0.0):
        raise ConfigError("errors must be positive to fit an order")
    return -float(np.polyfit(np.log(ns), np.log(errors), 1)[0])


# --- breather ----------------------------------------------------------------

@dataclass(frozen=True)
class BreatherSpec:
    ell: int
    j: int
    eps: float

    def __post_init__(self):
        if not (1 <= self.j <= self.ell - 1):
            raise ConfigError("need winding ell > frequency j >= 1")
        if self.eps <= 0.0:
            raise ConfigError("eps must be positive")

    @property
    def gap(self) -> float:
        return math.sqrt(self.ell**2 - self.j**2)


def breather_initial(spec: BreatherSpec, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Winding great circle plus a z-perturbation on the second level.

    The raw second level has squared norm 1 + eps^2 sin^2(j theta) and is
    projected back along the first level before use.
    """
    theta = circle_angles(grid)
    zeros = np.zeros_like(theta)
    u0 = np.stack([np.cos(spec.ell * theta), np.sin(spec.ell * theta), zeros], axis=-1)
    raw = u0.copy()
    raw[..., 2] += spec.eps * np.sin(spec.j * theta)
    u1 = project_quadric(u0, raw, BilinearForm.euclidean(3))
    return u0, u1


def sine_gordon_breather(spec: BreatherSpec, theta, t: float):
    """Classical breather of alpha_tt - alpha_xx = l^2 sin(alpha)."""
    g = spec.gap
    return 4.0 * np.arctan((g / spec.j) * np.sin(spec.j * np.asarray(theta))
                           / np.cosh(g * t))


def breather_phase(spec: BreatherSpec, theta: float, t: float,
                   tol: float = 1e-12) -> float:
    """s(x,t): accumulated phase integral of the sine-Gordon breather.

    The integrand decays like exp(gap * tau) toward -infinity, so a finite
    lower limit suffices.
    """
    t_min = t - 40.0 / spec.gap
    val, _ = quad(
        lambda tau: spec.ell * math.sin(0.5 * float(sine_gordon_breather(spec, theta, tau))),
        t_min, t, epsabs=tol, epsrel=tol, limit=200,
    )
    return float(val)


def breather_reference(spec: BreatherSpec, theta, s: float | None = None,
                       t: float | None = None) -> np.ndarray:
    """Reference breather wave map u_b(theta, s); give s directly or a time t.

    kappa solves tan(kappa) = (l/j) tan(j theta) and is evaluated through
    atan2, which keeps cos(kappa) and sin(kappa) continuous across the
    tangent branch points.
    """
    if (s is None) == (t is None):
        raise ValueError("provide exactly one of s and t")
    theta = np.asarray(theta, dtype=float)
    if s is None:
        s = np.vectorize(lambda th: breather_phase(spec, th, t))(theta)
    s = np.asarray(s, dtype=float)
    ratio = spec.ell / spec.j
    sin_k = ratio * np.sin(spec.j * theta)
    cos_k = np.cos(spec.j * theta)
    norm = np.hypot(sin_k, cos_k)
    sin_k = sin_k / norm
    cos_k = cos_k / norm
    beta = spec.ell * theta - np.arctan2(sin_k, cos_k)

    tiny = np.abs(sin_k) < 1e-300
    phase = np.where(tiny, 0.0, s / np.where(tiny, 1.0, sin_k))
    u = np.stack(
        [
            cos_k * np.cos(beta) - sin_k * np.cos(phase) * np.sin(beta),
            cos_k * np.sin(beta) + sin_k * np.cos(phase) * np.cos(beta),
            sin_k * np.sin(phase),
        ],
        axis=-1,
    )
    return u


# --- blow-up -----------------------------------------------------------------

def blowup_bump(r):
    """Radial profile a(r) = (1-2r)^4 inside r = 1/2, zero outside."""
    r = np.asarray(r, dtype=float)
    return np.where(r <= 0.5, (1.0 - 2.0 * np.minimum(r, 0.5)) ** 4, 0.0)


def blowup_initial(grid: Grid) -> np.ndarray:
    """Equivariant blow-up data on [-1/2, 1/2]^2; rest start (v0 = 0)."""
    if grid.dim != 2 or any(bc != "neumann" for bc in grid.boundaries):
        raise ConfigError("blow-up data needs a 2D Neumann grid")
    x1, x2 = grid.coords()
    r = np.hypot(x1, x2)
    a = blowup_bump(r)
    denom = a**2 + r**2
    u = np.stack([2.0 * x1 * a, 2.0 * x2 * a, a**2 - r**2], axis=-1)
    return u / denom[..., None]


def blowup_point(x1: float, x2: float) -> np.ndarray:
    """Pointwise evaluation of the blow-up data (for equivariance checks)."""
    r = math.hypot(x1, x2)
    a = float(blowup_bump(r))
    denom = a**2 + r**2
    return np.array([2.0 * x1 * a, 2.0 * x2 * a, a**2 - r**2]) / denom


# --- potential / tilted circle ----------------------------------------------

def tilted_circle_initial(angle: float, grid: Grid) -> np.ndarray:
    """Single winding around a great circle tilted from the equator plane."""
    theta = circle_angles(grid)
    return np.stack(
        [
            np.cos(theta),
            np.sin(theta) * math.cos(angle),
            np.sin(theta) * math.sin(angle),
        ],
        axis=-1,
    )


# --- hyperboloid / Poincare disk ----------------------------------------------

def poincare_lift(w) -> np.ndarray:
    """Lift Poincare-disk points |w| < 1 to the upper hyperboloid sheet."""
    w = np.asarray(w, dtype=complex)
    mod2 = (w * w.conj()).real
    if np.any(mod2 >= 1.0):
        raise ValueError("point outside the Poincare disk")
    denom = 1.0 - mod2
    return np.stack([2.0 * w.real, 2.0 * w.imag, 1.0 + mod2], axis=-1) / denom[..., None]


def poincare_project(p: np.ndarray):
    """Stereographic projection (x/(1+z), y/(1+z)) of upper-sheet points."""
    p = np.asarray(p, dtype=float)
    z = p[..., 2]
    if np.any(z <= 0.0):
        raise ValueError("point not on the upper hyperboloid sheet")
    resid = np.abs(-p[..., 0] ** 2 - p[..., 1] ** 2 + z**2 - 1.0)
    if np.any(resid > 1e-8):
        raise ValueError("point not on the unit hyperboloid")
    w = (p[..., 0] + 1j * p[..., 1]) / (1.0 + z)
    return complex(w) if w.ndim == 0 else w


def hyperbolic_curve(theta) -> np.ndarray:
    """The initial curve e^{i theta} + 0.3 e^{8 i theta} + 0.2 e^{4 i theta}."""
    theta = np.asarray(theta, dtype=float)
    return (np.exp(1j * theta) + 0.3 * np.exp(8j * theta) + 0.2 * np.exp(4j * theta))


def hyperbolic_initial(grid: Grid, scale: float = 0.35) -> np.ndarray:
    """Lift of the scaled initial curve; the unscaled curve leaves the disk.

    The curve has maximum modulus 1.5, so scale must stay below 2/3.  The
    default keeps the discrete-energy oscillation of the k=8 harmonic inside
    the 5% conservation budget at N=256, Courant 1/2.
    """
    theta = circle_angles(grid)
    w = scale * hyperbolic_curve(theta)
    if float(np.max(np.abs(w))) >= 1.0:
        raise ConfigError(
            f"scaled curve exits the Poincare disk (max modulus "
            f"{float(np.max(np.abs(w))):.3f}); reduce scale"
        )
    return poincare_lift(w)


def hyperbolic_scale_sweep(scales: Sequence[float], n: int = 256,
                           courant: float = 0.5) -> list[tuple[float, float]]:
    """Initial energy per curve scale (the paper's unscaled curve leaves the
    disk, so an exact energy match is not attainable; this reports what is)."""
    from .diagnostics import discrete_hamiltonian

    grid = Grid.circle(n, length=1.0)
    form = BilinearForm.minkowski()
    constraint = QuadricConstraint(form)
    pot = zero_potential()
    out = []
    for scale in scales:
        u0 = hyperbolic_initial(grid, scale)
        state = start_from_velocity(u0, np.zeros_like(u0), pot, constraint,
                                    courant * grid.min_spacing, grid)
        out.append((float(scale), discrete_hamiltonian(state, form, pot)))
    return out


# --- complex projective demo ---------------------------------------------------

def cp_demo_initial(grid: Grid, n: int = 1) -> np.ndarray:
    """Smooth non-geodesic loop of rank-1 projectors; rest start (v0 = 0)."""
    if n < 1:
        raise ConfigError("projective dimension must be at least 1")
    theta = circle_angles(grid)
    psi = np.zeros(theta.shape + (n + 1,), dtype=complex)
    psi[..., 0] = 1.0 + 0.2 * np.cos(theta)
    psi[..., 1] = 0.5 * np.exp(1j * theta)
    return embed_cp(psi)


# --- experiment registry --------------------------------------------------------

@dataclass
class PreparedRun:
    config: RunConfig
    grid: Grid
    state: SimState
    potential: Potential
    constraint: Constraint
    center_index: tuple[int, ...] | None = None
    exact: Callable[[float], np.ndarray] | None = None


@dataclass(frozen=True)
class ExperimentDef:
    name: str
    description: str
    defaults: RunConfig
    build: Callable[[RunConfig], PreparedRun]


def _points_tuple(config: RunConfig, dim: int) -> tuple[int, ...]:
    pts = config.points
    if isinstance(pts, int):
        return (pts,) * dim
    pts = tuple(int(p) for p in pts)
    if len(pts) != dim:
        raise ConfigError(f"{config.experiment} needs {dim} point count(s)")
    return pts


def _modes_from_params(params: dict) -> tuple[ModeSpec, ...]:
    raw = params.get("modes")
    if raw is None:
        return TABLE1_MODES
    return tuple(ModeSpec((int(k1), int(k2)), float(a), float(p))
                 for (k1, k2), a, p in raw)


def _build_torus(config: RunConfig) -> PreparedRun:
    n1, n2 = _points_tuple(config, 2)
    grid = Grid.torus(n1, n2)
    modes = _modes_from_params(config.params)
    dt = config.resolve_dt(grid)
    constraint = QuadricConstraint(BilinearForm.euclidean(2))
    pot = zero_potential()
    x1, x2 = grid.coords()
    u0 = analytic_circle_solution(modes, x1, x2, 0.0)
    v0 = analytic_circle_velocity(modes, x1, x2, 0.0)
    state = start_from_velocity(u0, v0, pot, constraint, dt, grid)
    return PreparedRun(
        config=config, grid=grid, state=state, potential=pot, constraint=constraint,
        exact=lambda t: analytic_circle_solution(modes, x1, x2, t),
    )


def _build_breather(config: RunConfig) -> PreparedRun:
    (n,) = _points_tuple(config, 1)
    grid = Grid.circle(n, length=float(config.params.get("length", 1.0)))
    spec = BreatherSpec(
        ell=int(config.params.get("ell", 7)),
        j=int(config.params.get("j", 5)),
        eps=float(config.params.get("eps", 1e-4)),
    )
    dt = config.resolve_dt(grid)
    constraint = QuadricConstraint(BilinearForm.euclidean(3))
    pot = zero_potential()
    u0, u1 = breather_initial(spec, grid)
    state = SimState(grid, dt, 1, u_prev=u0, u_curr=u1)
    return PreparedRun(config=config, grid=grid, state=state,
                       potential=pot, constraint=constraint)


def _build_blowup(config: RunConfig) -> PreparedRun:
    n1, n2 = _points_tuple(config, 2)
    grid = Grid.neumann_box(n1, n2)
    dt = config.resolve_dt(grid)
    constraint = QuadricConstraint(BilinearForm.euclidean(3))
    pot = zero_potential()
    u0 = blowup_initial(grid)
    state = start_from_velocity(u0, np.zeros_like(u0), pot, constraint, dt, grid)
    center = tuple(int(np.argmin(np.abs(grid.axis_coords(a)))) for a in range(2))
    return PreparedRun(config=config, grid=grid, state=state, potential=pot,
                       constraint=constraint, center_index=center)


def _build_potential(config: RunConfig) -> PreparedRun:
    (n,) = _points_tuple(config, 1)
    grid = Grid.circle(n, length=float(config.params.get("length", 1.0)))
    angle = math.radians(float(config.params.get("angle_deg", 45.0)))
    strength = float(config.params.get("strength", 400.0))
    dt = config.resolve_dt(grid)
    constraint = QuadricConstraint(BilinearForm.euclidean(3))
    pot = axis_potential(strength)
    u0 = tilted_circle_initial(angle, grid)
    state = start_from_velocity(u0, np.zeros_like(u0), pot, constraint, dt, grid)
    return PreparedRun(config=config, grid=grid, state=state,
                       potential=pot, constraint=constraint)


def _build_hyperbolic(config: RunConfig) -> PreparedRun:
    (n,) = _points_tuple(config, 1)
    grid = Grid.circle(n, length=float(config.params.get("length", 1.0)))
    scale = float(config.params.get("scale", 0.35))
    dt = config.resolve_dt(grid)
    constraint = QuadricConstraint(BilinearForm.minkowski())
    pot = zero_potential()
    u0 = hyperbolic_initial(grid, scale)
    state = start_from_velocity(u0, np.zeros_like(u0), pot, constraint, dt, grid)
    return PreparedRun(config=config, grid=grid, state=state,
                       potential=pot, constraint=constraint)


def _build_cp_demo(config: RunConfig) -> PreparedRun:
    (n,) = _points_tuple(config, 1)
    grid = Grid.circle(n, length=float(config.params.get("length", TWO_PI)))
    nproj = int(config.params.get("n", 1))
    dt = config.resolve_dt(grid)
    constraint = ProjectiveConstraint(nproj)
    pot = zero_potential()
    rho0 = cp_demo_initial(grid, nproj)
    state = start_from_velocity(rho0, np.zeros_like(rho0), pot, constraint, dt, grid)
    return PreparedRun(config=config, grid=grid, state=state,
                       potential=pot, constraint=constraint)


EXPERIMENTS: dict[str, ExperimentDef] = {}


def _register(name, description, defaults, build):
    EXPERIMENTS[name] = ExperimentDef(name, description, defaults, build)


_register(
    "convergence2d",
    "torus-to-circle wave map against the analytic solution (order study)",
    RunConfig(experiment="convergence2d", points=64, final_time=1.0,
              params={"n_values": [16, 32, 64, 128]}),
    _build_torus,
)
_register(
    "torus-energy",
    "long-time energy conservation on the 2D torus, three-mode data",
    RunConfig(experiment="torus-energy", points=128, final_time=11.0,
              diagnostics_every=1),
    _build_torus,
)
_register(
    "breather",
    "sphere-target breather from the winding great circle",
    RunConfig(experiment="breather", points=512, final_time=25.0,
              params={"ell": 7, "j": 5, "eps": 1e-4},
              snapshot_every=8, diagnostics_every=4),
    _build_breather,
)
_register(
    "blowup",
    "equivariant blow-up data on the Neumann square",
    RunConfig(experiment="blowup", points=128, final_time=0.6,
              snapshot_every=8, diagnostics_every=1),
    _build_blowup,
)
_register(
    "potential",
    "tilted great circle driven by the axis potential",
    RunConfig(experiment="potential", points=512, final_time=0.5,
              params={"angle_deg": 45.0, "strength": 400.0},
              snapshot_every=16, diagnostics_every=4),
    _build_potential,
)
_register(
    "hyperbolic",
    "hyperboloid-sheet target from the scaled Poincare-disk curve",
    RunConfig(experiment="hyperbolic", points=256, final_time=12.0,
              params={"scale": 0.35}, snapshot_every=32, diagnostics_every=4),
    _build_hyperbolic,
)
_register(
    "cp-demo",
    "complex projective target: smooth projector loop",
    RunConfig(experiment="cp-demo", points=64, final_time=16.0,
              params={"n": 1}, snapshot_every=16, diagnostics_every=4),
    _build_cp_demo,
)


def default_config(name: str) -> RunConfig:
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}")
    return EXPERIMENTS[name].defaults


def prepare(config: RunConfig) -> PreparedRun:
    if config.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {config.experiment!r}")
    return EXPERIMENTS[config.experiment].build(config)


def config_with_overrides(name: str, **overrides) -> RunConfig:
    base = default_config(name)
    params = dict(base.params)
    params.update(overrides.pop("params", {}))
    return replace(base, params=params, **overrides)
