"""Constraint definitions and projection solvers.

Quadric targets (sphere, hyperboloid) get the closed-form multiplier of the
constrained leapfrog; complex projective targets get a Newton iteration on a
Hermitian matrix multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BilinearForm


class ProjectionInfeasibleError(RuntimeError):
    """Raised when the projection quadratic has no real root at some node."""

    def __init__(self, message: str, nodes=None):
        super().__init__(message)
        self.nodes = nodes


class DegenerateDirectionError(RuntimeError):
    """Projection direction is orthogonal to the motion needed to restore feasibility."""


class NewtonConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class QuadricConstraint:
    """g(u) = dot(u,u) - level under a signature form.

    The projection direction at u is u itself; the conventional factor 2 of
    the gradient is absorbed into the multiplier.
    """

    form: BilinearForm
    level: float = 1.0

    def residual(self, u: np.ndarray) -> np.ndarray | float:
        return self.form.dot(u, u) - self.level

    def max_residual(self, u: np.ndarray) -> float:
        return float(np.max(np.abs(self.residual(u))))


def stable_quadratic_root(p, s):
    """Smaller-magnitude root of lambda^2 + 2 s lambda + p = 0.

    Evaluated as p / (-s - sign(s) sqrt(s^2 - p)), which avoids the
    catastrophic cancellation of -s + sqrt(s^2 - p) when s is positive (the
    generic projection case).  Broadcasts; raises when a discriminant is
    negative.
    """
    scalar = np.ndim(p) == 0
    p = np.atleast_1d(np.asarray(p, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))

    disc = s * s - p
    if np.any(disc < 0.0):
        bad = np.argwhere(disc < 0.0)
        raise ProjectionInfeasibleError(
            f"projection infeasible at {bad.shape[0]} node(s); "
            f"worst discriminant {float(disc.min()):.3e}",
            nodes=bad,
        )
    root = np.sqrt(disc)
    denom = -(s + np.where(s >= 0.0, root, -root))
    zero = denom == 0.0
    if np.any(zero & (p != 0.0)):
        raise DegenerateDirectionError(
            "projection direction degenerate: zero denominator with nonzero residual"
        )
    lam = np.divide(p, denom, out=np.zeros_like(p), where=~zero)
    return float(lam[0]) if scalar else lam


def quadric_lambda(u0: np.ndarray, utilde: np.ndarray, form: BilinearForm):
    """Multiplier lambda such that utilde + lambda*u0 lies on the quadric.

    With p = dot(utilde,utilde) - 1 and s = dot(u0,utilde) the multiplier is
    the smaller-magnitude root of lambda^2 + 2 s lambda + p = 0, so the
    projected point is the one nearest the predictor.  Broadcasts over node
    axes.
    """
    p = form.dot(utilde, utilde) - 1.0
    s = form.dot(u0, utilde)
    return stable_quadratic_root(p, s)


def project_quadric(u0: np.ndarray, utilde: np.ndarray, form: BilinearForm) -> np.ndarray:
    """Project utilde onto the quadric along the direction of u0."""
    lam = quadric_lambda(u0, utilde, form)
    return utilde + np.asarray(lam)[..., None] * u0


# --- complex projective targets -------------------------------------------
#
# Points are rank-1 Hermitian projectors rho (rho^2 = rho, Tr rho = 1) inside
# the space of (n+1) x (n+1) Hermitian matrices with the Frobenius pairing.


def hermitian_basis(k: int) -> np.ndarray:
    """Orthonormal real basis of k x k Hermitian matrices, shape (k*k, k, k)."""
    out = np.zeros((k * k, k, k), dtype=complex)
    idx = 0
    for i in range(k):
        out[idx, i, i] = 1.0
        idx += 1
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(k):
        for j in range(i + 1, k):
            out[idx, i, j] = inv_sqrt2
            out[idx, j, i] = inv_sqrt2
            idx += 1
            out[idx, i, j] = 1j * inv_sqrt2
            out[idx, j, i] = -1j * inv_sqrt2
            idx += 1
    return out


def embed_cp(psi: np.ndarray) -> np.ndarray:
    """Embed a nonzero complex vector as the rank-1 projector psi psi* / (psi* psi).

    Accepts a single (n+1,) vector or a node-indexed array (..., n+1).
    """
    psi = np.asarray(psi, dtype=complex)
    norm2 = np.sum(psi * psi.conj(), axis=-1).real
    if np.any(norm2 == 0.0):
        raise ValueError("cannot embed the zero vector")
    rho = psi[..., :, None] * psi.conj()[..., None, :]
    return rho / norm2[..., None, None]


def _vec(h: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Real coefficients of Hermitian matrices (..., k, k) in the given basis."""
    return np.einsum("...ij,cji->...c", h, basis).real


def _unvec(x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return np.einsum("...c,cij->...ij", x, basis)


@dataclass(frozen=True)
class ProjectiveConstraint:
    """Complex projective target CP^n embedded in Hermitian (n+1)x(n+1) matrices."""

    n: int
    newton_tol: float = 1e-13
    max_iter: int = 50

    @property
    def k(self) -> int:
        return self.n + 1

    def idempotency_residual(self, rho: np.ndarray) -> np.ndarray:
        r = rho @ rho - rho
        return np.sqrt(np.sum((r * r.conj()).real, axis=(-2, -1)))

    def trace_residual(self, rho: np.ndarray) -> np.ndarray:
        return np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0)

    def max_residual(self, rho: np.ndarray) -> float:
        return float(np.max(self.idempotency_residual(rho)))


def project_cp(rho0: np.ndarray, rhot: np.ndarray, constraint: ProjectiveConstraint,
               mode: str = "directional") -> tuple[np.ndarray, np.ndarray]:
    """Project Hermitian rhot back onto the rank-1 projectors.

    ``directional`` moves along the derivative of the idempotency residual at
    the previous point: rho = rhot + rho0 L + L rho0 - L for a Hermitian
    multiplier L, solved by Newton from L = 0.  (Dropping the -L term pins
    the complement block of rho to that of rhot, which is infeasible for
    generic perturbations and stalls on stationary data.)  ``direct`` solves
    the quadratic matrix equation whose solution shifts the point itself,
    rho = rhot + L.  Batches over leading node axes.  Both Newton systems can
    be rank-deficient in directions that do not move the projected point, so
    steps are taken in the minimum-norm least-squares sense.
    """
    if mode not in ("directional", "direct"):
        raise ValueError(f"unknown projection mode {mode!r}")
    rho0 = np.asarray(rho0, dtype=complex)
    rhot = np.asarray(rhot, dtype=complex)
    single = rhot.ndim == 2
    if single:
        rho0 = rho0[None]
        rhot = rhot[None]
    k = constraint.k
    basis = hermitian_basis(k)
    m = k * k
    nodes = rhot.shape[:-2]

    lam = np.zeros_like(rhot)
    # dP/dL applied to each basis element; constant in L for both modes' P-map
    if mode == "directional":
        dP = np.einsum("...ab,cbd->...cad", rho0, basis) + \
             np.einsum("cab,...bd->...cad", basis, rho0) - basis
    else:
        dP = np.broadcast_to(basis, nodes + (m, k, k))
    iters = 0
    for iters in range(1, constraint.max_iter + 1):
        if mode == "directional":
            P = rhot + rho0 @ lam + lam @ rho0 - lam
        else:
            P = rhot + lam
        R = P @ P - P
        res = np.sqrt(np.sum((R * R.conj()).real, axis=(-2, -1)))
        if float(res.max()) <= constraint.newton_tol:
            break
        dR = dP @ P[..., None, :, :] + P[..., None, :, :] @ dP - dP
        # columns of the real Jacobian: vec of dR along the basis direction axis
        J = np.einsum("...cij,dji->...dc", dR, basis).real
        rhs = -_vec(R, basis)
        step = np.einsum("...cd,...d->...c", np.linalg.pinv(J, rcond=1e-12), rhs)
        lam = lam + _unvec(step, basis)
    else:
        raise NewtonConvergenceError(
            f"CP projection failed after {constraint.max_iter} iterations "
            f"(residual {float(res.max()):.3e})",
            residual=float(res.max()),
            iterations=constraint.max_iter,
        )

    if mode == "directional":
        rho = rhot + rho0 @ lam + lam @ rho0 - lam
    else:
        rho = rhot + lam
    # exact hermitization guards against roundoff skew accumulating over runs
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    if single:
        return rho[0], lam[0]
    return rho, lam
