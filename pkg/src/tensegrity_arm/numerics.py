"""Small numerical kernel shared by the mechanics modules.

Everything here is deliberately low-dimensional: residuals live in R^3,
matrices are 2x2 or 3x3, and scalar root finding runs on a fixed grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import SingularConfigurationError

# Above this condition number a 3x3 system is treated as singular.
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class SolverSettings:
    max_iterations: int = 100
    residual_tolerance: float = 1e-10
    fd_step: float = 1e-6
    damping: float = 0.5
    max_halvings: int = 30

    def __post_init__(self):
        if self.max_iterations <= 0 or self.max_halvings <= 0:
            raise ValueError("iteration counts must be positive")
        if not 0.0 < self.residual_tolerance < 1.0:
            raise ValueError("residual_tolerance must lie in (0, 1)")
        if self.fd_step <= 0.0:
            raise ValueError("fd_step must be positive")
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must lie in (0, 1)")


@dataclass
class NewtonResult:
    x: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)


def newton_solve(
    residual: Callable[[np.ndarray], np.ndarray],
    derivative: Callable[[np.ndarray], np.ndarray],
    guess: Sequence[float],
    settings: SolverSettings | None = None,
) -> NewtonResult:
    """Damped Newton iteration for a square system.

    The step is taken from a direct solve when the derivative is well
    conditioned and from a least-squares (pseudo-inverse) solve otherwise.
    Each step is halved until the residual norm decreases.  The returned
    ``trace`` holds ``(iteration, residual_norm, step_length)`` tuples.
    """
    settings = settings or SolverSettings()
    x = np.array(guess, dtype=float)
    r = np.asarray(residual(x), dtype=float)
    norm = float(np.linalg.norm(r))
    trace = [(0, norm, 0.0)]
    if not np.isfinite(norm):
        return NewtonResult(x, norm, 0, False, trace)

    for it in range(1, settings.max_iterations + 1):
        if norm < settings.residual_tolerance:
            return NewtonResult(x, norm, it - 1, True, trace)
        jac = np.asarray(derivative(x), dtype=float)
        if not np.all(np.isfinite(jac)):
            return NewtonResult(x, norm, it - 1, False, trace)
        if np.linalg.cond(jac) < MAX_CONDITION:
            dx = np.linalg.solve(jac, -r)
        else:
            dx = np.linalg.lstsq(jac, -r, rcond=None)[0]

        t = 1.0
        for _ in range(settings.max_halvings):
            x_new = x + t * dx
            r_new = np.asarray(residual(x_new), dtype=float)
            norm_new = float(np.linalg.norm(r_new))
            if np.isfinite(norm_new) and norm_new < norm:
                break
            t *= settings.damping
        else:
            trace.append((it, norm, 0.0))
            return NewtonResult(x, norm, it, False, trace)

        x, r, norm = x_new, r_new, norm_new
        trace.append((it, norm, t * float(np.linalg.norm(dx))))

    return NewtonResult(x, norm, settings.max_iterations, norm < settings.residual_tolerance, trace)


def bracketed_roots(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    grid_n: int = 2001,
    xtol: float = 1e-12,
) -> list[float]:
    """Roots of a scalar function located by sign changes on a uniform grid.

    Roots of even multiplicity (no sign change) are missed.  Grid points
    where ``f`` is not finite split the search into independent pieces.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    xs = np.linspace(lo, hi, grid_n)
    vs = np.array([f(float(x)) for x in xs], dtype=float)
    return roots_from_samples(f, xs, vs, xtol=xtol)


def roots_from_samples(f, xs, vs, xtol=1e-12) -> list[float]:
    roots: list[float] = []
    for i in range(len(xs)):
        if vs[i] == 0.0:
            roots.append(float(xs[i]))
            continue
        if i + 1 >= len(xs):
            break
        v0, v1 = vs[i], vs[i + 1]
        if not (np.isfinite(v0) and np.isfinite(v1)):
            continue
        if v0 * v1 < 0.0:
            roots.append(float(brentq(f, xs[i], xs[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)))
    return roots


def finite_difference(f, x, step: float = 1e-6):
    """Central-difference derivative.

    For scalar ``x`` returns df/dx (scalar or array, matching ``f``).  For
    vector ``x`` returns the matrix whose column ``j`` is df/dx_j.
    """
    if np.ndim(x) == 0:
        x = float(x)
        return (np.asarray(f(x + step)) - np.asarray(f(x - step))) / (2.0 * step)
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        cols.append((np.asarray(f(x + e), dtype=float) - np.asarray(f(x - e), dtype=float)) / (2.0 * step))
    return np.stack(cols, axis=-1)


def local_extrema(values) -> tuple[list[int], list[int]]:
    """Indices of strict interior minima and maxima of a sampled curve.

    NaN samples act as gaps: a point only qualifies when both neighbours
    are finite.
    """
    v = np.asarray(values, dtype=float)
    minima, maxima = [], []
    for i in range(1, len(v) - 1):
        a, m, c = v[i - 1], v[i], v[i + 1]
        if not (np.isfinite(a) and np.isfinite(m) and np.isfinite(c)):
            continue
        if m < a and m < c:
            minima.append(i)
        elif m > a and m > c:
            maxima.append(i)
    return minima, maxima


# dense 2x2 / 3x3 helpers ---------------------------------------------------


def condition_number(a) -> float:
    return float(np.linalg.cond(np.asarray(a, dtype=float)))


def solve_small(a, b, max_condition: float = MAX_CONDITION):
    """Solve ``a x = b`` for a small dense matrix, refusing singular input."""
    a = np.asarray(a, dtype=float)
    cond = condition_number(a)
    if not math.isfinite(cond) or cond > max_condition:
        raise SingularConfigurationError(f"matrix is singular to working precision (cond={cond:.3g})")
    return np.linalg.solve(a, np.asarray(b, dtype=float))


def inverse_small(a, max_condition: float = MAX_CONDITION) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return solve_small(a, np.eye(a.shape[0]), max_condition)


def determinant(a) -> float:
    return float(np.linalg.det(np.asarray(a, dtype=float)))


def is_positive_definite(a, rtol: float = 1e-12) -> bool:
    """True when the symmetric part of ``a`` has only positive eigenvalues."""
    a = np.asarray(a, dtype=float)
    sym = 0.5 * (a + a.T)
    eig = np.linalg.eigvalsh(sym)
    scale = max(float(np.max(np.abs(eig))), np.finfo(float).tiny)
    return bool(eig[0] > rtol * scale)
