"""ℓ1 recovery of sparse vectors from ±1 sketches.

Solves

    minimise Σ w_i |d_i|  subject to  ||Δy − Φ d||_2 ≤ ε  (and optionally |d_i| ≤ bound)

with ADMM: an exact projection onto the constraint set alternates with
soft thresholding (clipped to the box when ``bound`` is given). For
noiseless integer sketches the constraint set is the affine subspace
``Φ d = Δy`` and the projection is a pseudo-inverse correction.

:func:`solve_lattice` adds reweighting for integer-valued ``d``: when the
plain ℓ1 minimiser is not an exact lattice solution, the weights are reset
to ``1 / (|d̂_i| + δ)`` and the problem is solved again.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from ..errors import ParameterError, SolverError
from .matrix import SensingMatrix

__all__ = ["solve_l1", "solve_lattice", "DEFAULT_EPSILON", "MAX_ITERATIONS",
           "REWEIGHT_PASSES"]

DEFAULT_EPSILON = 1e-6
MAX_ITERATIONS = 2000
# Below this ε the ball is replaced by the affine set it contains.
_EXACT_BALL = 1e-6
_SNAP_EVERY = 10
REWEIGHT_PASSES = 4
_REWEIGHT_DELTA = 0.5
# Short passes spend the same 2000-iteration budget on more reweightings.
_PASS_ITERATIONS = MAX_ITERATIONS // (REWEIGHT_PASSES + 1)


def _project_ball(v, y, matrix, epsilon):
    r = matrix.dense @ v - y
    norm_r = np.linalg.norm(r)
    u, s, vt = matrix.svd
    if epsilon <= _EXACT_BALL:
        return v - matrix.pseudo_inverse @ r
    if norm_r <= epsilon:
        return v
    rho = u.T @ r
    s2 = s * s

    def excess(lam):
        return np.linalg.norm(rho * (lam / (s2 + lam))) - epsilon

    lam_hi = epsilon * s2.max() / (norm_r - epsilon) * 2.0
    lam = brentq(excess, 0.0, lam_hi, xtol=1e-14, rtol=1e-12)
    return v - vt.T @ (s / (s2 + lam) * rho)


def _soft(v, kappa, bound):
    out = np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)
    if bound is not None:
        np.clip(out, -bound, bound, out=out)
    return out


def solve_l1(delta_y, matrix: SensingMatrix, epsilon=DEFAULT_EPSILON, *,
             bound=None, lattice=False, weights=None, rho=1.0, tol=1e-7,
             max_iterations=MAX_ITERATIONS) -> np.ndarray:
    """Sparse ``d`` with ``||Δy − Φd||₂ ≤ ε`` and small ℓ1 norm.

    Parameters
    ----------
    delta_y : array of length ``matrix.rows``
    epsilon : float
        Constraint radius; values up to 1e-6 are treated as equality.
    bound : float, optional
        Box constraint ``|d_i| ≤ bound``.
    weights : array of length ``matrix.cols``, optional
        Positive per-entry ℓ1 weights; all ones by default.
    lattice : bool
        The true ``d`` is known to be integer valued. The iterate is rounded
        every few steps and returned as soon as the rounded vector satisfies
        ``Φd = Δy`` exactly.

    Raises
    ------
    SolverError
        No convergence within ``max_iterations``; ``.residual`` carries the
        constraint violation of the last sparse iterate.
    """
    y = np.asarray(delta_y, dtype=float).reshape(-1)
    if y.size != matrix.rows:
        raise ParameterError(f"sketch has {y.size} entries, matrix has {matrix.rows} rows")
    if epsilon < 0:
        raise ParameterError("epsilon must be non-negative")
    n = matrix.cols
    if np.linalg.norm(y) <= epsilon:
        return np.zeros(n)

    phi = matrix.dense
    exact_y = np.round(y) if lattice else None
    if weights is None:
        kappa = 1.0 / rho
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size != n or np.any(w <= 0):
            raise ParameterError("weights must be positive, one per column")
        kappa = w / rho
    z = _soft(_project_ball(np.zeros(n), y, matrix, epsilon), kappa, bound)
    u = np.zeros(n)
    limit = tol * np.sqrt(n)
    for it in range(1, max_iterations + 1):
        x = _project_ball(z - u, y, matrix, epsilon)
        z_old = z
        z = _soft(x + u, kappa, bound)
        u += x - z
        if lattice and it % _SNAP_EVERY == 0:
            snapped = np.round(z)
            if np.array_equal(phi @ snapped, exact_y):
                return snapped
        primal = np.linalg.norm(x - z)
        dual = rho * np.linalg.norm(z - z_old)
        if primal < limit and dual < limit:
            break
    else:
        residual = float(np.linalg.norm(y - phi @ z))
        raise SolverError(f"no convergence after {max_iterations} iterations "
                          f"(residual {residual:.3g})", residual, z)

    if lattice:
        snapped = np.round(z)
        if np.array_equal(phi @ snapped, exact_y):
            return snapped
    if np.linalg.norm(y - phi @ z) <= epsilon + 1e-6:
        return z
    return x


def _is_lattice_solution(d, y, matrix):
    return np.array_equal(d, np.round(d)) and np.array_equal(matrix.dense @ d, np.round(y))


def solve_lattice(delta_y, matrix: SensingMatrix, epsilon=DEFAULT_EPSILON, *, bound=1.0,
                  passes=REWEIGHT_PASSES, max_iterations=_PASS_ITERATIONS,
                  **kwargs) -> np.ndarray:
    """Integer ``d`` with ``Φd = Δy`` by box-constrained, reweighted ℓ1.

    The first pass is :func:`solve_l1` with unit weights. Each further pass
    reweights from the previous iterate, even one that did not converge.
    ``max_iterations`` applies per pass.

    Raises
    ------
    SolverError
        No pass produced a solution; the error of the last pass is raised.
    """
    weights, error, d_hat = None, None, None
    for _ in range(passes + 1):
        try:
            d_hat = solve_l1(delta_y, matrix, epsilon, bound=bound, lattice=True,
                             weights=weights, max_iterations=max_iterations, **kwargs)
            error = None
        except SolverError as exc:
            error, d_hat = exc, exc.iterate
        if error is None and _is_lattice_solution(d_hat, delta_y, matrix):
            return d_hat
        if d_hat is None:
            break
        weights = 1.0 / (np.abs(d_hat) + _REWEIGHT_DELTA)
    if error is not None:
        raise error
    return d_hat
