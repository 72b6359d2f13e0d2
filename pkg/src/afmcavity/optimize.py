"""Small damped least-squares (Levenberg-Marquardt) solver.

Sized for the dense, few-parameter problems in this toolkit: normal equations
are formed explicitly and damped with a Marquardt diagonal.  The schedule is
the classic one: shrink the damping after an accepted step, grow it and retry
after a rejected one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

MAX_ITERATIONS = 200
GRADIENT_TOL = 1e-10  # infinity norm of J^T r
STEP_TOL = 1e-12  # relative parameter step


@dataclass
class LMResult:
    x: np.ndarray
    residual: np.ndarray
    jacobian: np.ndarray
    cost: float  # sum of squared residuals
    gradient_norm: float
    iterations: int
    converged: bool
    message: str


def numerical_jacobian(
    fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, rel_step: float = 1e-6
) -> np.ndarray:
    """Central-difference Jacobian of a residual vector.

    Steps are relative to each parameter with a floor of ``rel_step`` so that
    zero-valued parameters still get a finite perturbation.
    """
    x = np.asarray(x, dtype=float)
    r0 = np.asarray(fun(x), dtype=float)
    jac = np.empty((r0.size, x.size))
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1.0)
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, i] = (np.asarray(fun(xp)) - np.asarray(fun(xm))) / (2.0 * h)
    return jac


def levenberg_marquardt(
    fun: Callable[[np.ndarray], np.ndarray],
    x0,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
    max_iterations: int = MAX_ITERATIONS,
    gradient_tol: float = GRADIENT_TOL,
    step_tol: float = STEP_TOL,
) -> LMResult:
    """Minimize sum(fun(x)**2) starting from x0.

    ``fun`` maps parameters to a residual vector; ``jac`` to its Jacobian
    (central differences are used when omitted).  ``converged`` is set only
    when the gradient criterion is met, so a True flag certifies a stationary
    point to ``gradient_tol``.
    """
    x = np.array(x0, dtype=float).ravel()
    r = np.asarray(fun(x), dtype=float)
    if r.ndim != 1:
        raise ValueError("residual function must return a 1-D vector")
    cost = float(r @ r)
    jac_fn = jac if jac is not None else (lambda p: numerical_jacobian(fun, p))
    jmat = np.atleast_2d(np.asarray(jac_fn(x), dtype=float))
    lam = 1e-3
    message = "maximum iterations reached"
    converged = False
    iterations = 0

    for iterations in range(1, max_iterations + 1):
        grad = jmat.T @ r
        gradient_norm = float(np.max(np.abs(grad))) if grad.size else 0.0
        if gradient_norm < gradient_tol:
            converged = True
            message = "gradient below tolerance"
            iterations -= 1
            break

        normal = jmat.T @ jmat
        damping = np.diag(np.maximum(np.diag(normal), 1e-12))
        accepted = False
        step = None
        for _ in range(50):
            try:
                step = np.linalg.solve(normal + lam * damping, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            r_new = np.asarray(fun(x + step), dtype=float)
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            message = "no acceptable step found (damping exhausted)"
            break

        x = x + step
        r = r_new
        cost = cost_new
        jmat = np.atleast_2d(np.asarray(jac_fn(x), dtype=float))
        lam = max(lam / 9.0, 1e-14)
        if np.linalg.norm(step) <= step_tol * (np.linalg.norm(x) + step_tol):
            message = "parameter step below tolerance"
            break

    grad = jmat.T @ r
    gradient_norm = float(np.max(np.abs(grad))) if grad.size else 0.0
    if gradient_norm < gradient_tol:
        converged = True
        if message == "maximum iterations reached":
            message = "gradient below tolerance"
    return LMResult(
        x=x,
        residual=r,
        jacobian=jmat,
        cost=cost,
        gradient_norm=gradient_norm,
        iterations=iterations,
        converged=converged,
        message=message,
    )


def covariance_uncertainties(jacobian: np.ndarray, residual: np.ndarray) -> np.ndarray:
    """One-sigma parameter uncertainties from the linearized covariance.

    Covariance is s² (JᵀJ)⁻¹ with s² the residual variance; with no residual
    degrees of freedom the scale collapses to zero and so do the errors.
    """
    n_obs, n_par = jacobian.shape
    dof = n_obs - n_par
    ssr = float(residual @ residual)
    variance = ssr / dof if dof > 0 else 0.0
    cov = np.linalg.pinv(jacobian.T @ jacobian) * variance
    return np.sqrt(np.maximum(np.diag(cov), 0.0))
