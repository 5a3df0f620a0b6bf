"""Orientation optimization on the Stiefel manifold {A : A^T A = I}.

Riemannian conjugate gradient ascent (Polak-Ribiere+, QR retraction,
projection-based transport, Armijo backtracking) over 3x2 or 3x3 frames, with
the Euclidean gradient taken by forward finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

FD_STEP = 1e-6
ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
TAU_INIT = 1.0
TAU_MIN = 1e-10


class DegenerateStep(ArithmeticError):
    """Retraction input lost full column rank."""


def _sym(X):
    return 0.5 * (X + X.T)


def tangent_error(A, Z):
    return float(np.linalg.norm(Z.T @ A + A.T @ Z))


def euclidean_grad(objective: Callable, A, step=FD_STEP, scheme="forward"):
    """Entrywise finite-difference gradient of ``objective`` at ``A``."""
    A = np.asarray(A, dtype=float)
    grad = np.empty_like(A)
    base = objective(A) if scheme == "forward" else None
    for idx in np.ndindex(A.shape):
        Ap = A.copy()
        Ap[idx] += step
        if scheme == "forward":
            grad[idx] = (objective(Ap) - base) / step
        elif scheme == "central":
            Am = A.copy()
            Am[idx] -= step
            grad[idx] = (objective(Ap) - objective(Am)) / (2 * step)
        else:
            raise ValueError(f"unknown difference scheme {scheme!r}")
    return grad


def riemannian_grad(A, egrad):
    return egrad - A @ _sym(A.T @ egrad)


def transport(mu, A_new):
    return mu - A_new @ _sym(A_new.T @ mu)


def retract(A, step):
    """Q factor (positive-diagonal R convention) of ``A + step``."""
    A = np.asarray(A, dtype=float)
    if not np.any(step):
        return A.copy()
    Q, R = np.linalg.qr(A + step)
    d = np.diag(R)
    if np.min(np.abs(d)) < 1e-12 * max(1.0, np.max(np.abs(d))):
        raise DegenerateStep("retraction of a rank-deficient matrix")
    return Q * np.sign(d)


def manifold_dim(A):
    n, p = A.shape
    return n * p - p * (p + 1) // 2


@dataclass
class OrientationTrace:
    objective: list = field(default_factory=list)
    orthonormality: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    tangency: list = field(default_factory=list)
    stop_reason: str = ""

    @property
    def iterations(self):
        return len(self.steps)


def _armijo(objective, A, val, grad, mu):
    slope = float(np.sum(grad * mu))
    tau = TAU_INIT
    while tau >= TAU_MIN:
        try:
            A_new = retract(A, tau * mu)
        except DegenerateStep:
            tau *= ARMIJO_SHRINK
            continue
        new_val = objective(A_new)
        if new_val >= val + ARMIJO_C * tau * slope:
            return tau, A_new, new_val
        tau *= ARMIJO_SHRINK
    return None


def optimize_orientation(objective: Callable, A0, eps=1e-3, max_iters=100,
                         gradient: Callable | None = None, fd_step=FD_STEP):
    """Maximize ``objective`` over orthonormal frames starting from ``A0``.

    ``gradient(A)`` returns the Euclidean gradient; by default it is the
    forward difference of ``objective``. Returns the final frame and an
    :class:`OrientationTrace`.
    """
    if gradient is None:
        gradient = lambda X: euclidean_grad(objective, X, fd_step)
    A = np.array(A0, dtype=float)
    restart = 3 * manifold_dim(A)
    val = objective(A)
    grad = riemannian_grad(A, gradient(A))
    mu = grad
    trace = OrientationTrace([val], [float(np.linalg.norm(A.T @ A - np.eye(A.shape[1])))])
    since_restart = 0
    for _ in range(max_iters):
        if not np.any(grad):
            trace.stop_reason = "stationary"
            break
        if np.sum(grad * mu) <= 0:
            mu = grad
            since_restart = 0
        found = _armijo(objective, A, val, grad, mu)
        if found is None and not np.array_equal(mu, grad):
            mu = grad
            since_restart = 0
            found = _armijo(objective, A, val, grad, mu)
        if found is None:
            trace.stop_reason = "line-search"
            break
        tau, A_new, new_val = found
        gain = new_val - val
        grad_new = riemannian_grad(A_new, gradient(A_new))
        mu_t = transport(mu, A_new)
        g_t = transport(grad, A_new)
        since_restart += 1
        gg = float(np.sum(grad * grad))
        kappa = 0.0
        if since_restart < restart and gg > 0:
            kappa = max(0.0, float(np.sum(grad_new * (grad_new - g_t))) / gg)
        else:
            since_restart = 0
        A, val, grad = A_new, new_val, grad_new
        mu = grad + kappa * mu_t
        trace.objective.append(val)
        trace.orthonormality.append(float(np.linalg.norm(A.T @ A - np.eye(A.shape[1]))))
        trace.steps.append(tau)
        trace.tangency.append(tangent_error(A, mu_t))
        if gain < eps:
            trace.stop_reason = "converged"
            break
    else:
        trace.stop_reason = "max-iters"
    return A, trace
