"""Static equilibria of the three-segment chain with a fixed or loaded tip.

Two routes to the same equilibria are provided.  The energy route fixes the
tip position, parameterises the remaining one-dimensional family of shapes
by q1 and looks for stationary points of the total spring energy.  The
torque route solves position closure together with the condition that the
joint torques leave no moment at the tip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, InfeasibleError, SingularConfigurationError
from .kinematics import JointConfig, forward_kinematics, inverse_kinematics, jacobian
from .numerics import SolverSettings, newton_solve, roots_from_samples
from .segment import (
    SegmentControls,
    SegmentGeometry,
    segment_energy,
    segment_torque,
    segment_torque_derivative,
)

CURVATURE_STEP = 1e-4
S2_MIN = 1e-8


def chain_controls(controls) -> tuple[SegmentControls, SegmentControls, SegmentControls]:
    """Normalise controls to one entry per segment.

    Accepts a single :class:`SegmentControls` (shared), a float (shared
    symmetric free length) or a sequence of three entries.
    """
    if isinstance(controls, (int, float)):
        controls = SegmentControls.symmetric(float(controls))
    if isinstance(controls, SegmentControls):
        return (controls, controls, controls)
    out = tuple(controls)
    if len(out) != 3 or not all(isinstance(c, SegmentControls) for c in out):
        raise ValueError("expected exactly three SegmentControls")
    return out  # type: ignore[return-value]


def _prepare(geom: SegmentGeometry, controls):
    if not geom.is_symmetric:
        raise DomainError("the chain model needs symmetric segments")
    ctl = chain_controls(controls)
    for c in ctl:
        c.check_against(geom)
    return ctl


@dataclass(frozen=True)
class ManipulatorState:
    geom: SegmentGeometry
    controls: tuple
    q: JointConfig

    def __post_init__(self):
        object.__setattr__(self, "controls", _prepare(self.geom, self.controls))


@dataclass(frozen=True)
class EquilibriumPoint:
    q: JointConfig
    energy: float
    stable: bool
    feasible: bool
    branch: int


@dataclass(frozen=True)
class PlanarWrench:
    fx: float
    fy: float
    me: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.fx, self.fy, self.me])


# joint torques along the chain ---------------------------------------------


def chain_torques(geom, controls, q) -> np.ndarray:
    ctl = chain_controls(controls)
    return np.array([segment_torque(geom, c, float(qi)) for c, qi in zip(ctl, _qvec(q))])


def chain_torque_slopes(geom, controls, q) -> np.ndarray:
    ctl = chain_controls(controls)
    return np.array([segment_torque_derivative(geom, c, float(qi)) for c, qi in zip(ctl, _qvec(q))])


def _qvec(q) -> np.ndarray:
    if isinstance(q, JointConfig):
        return q.as_array()
    return np.asarray(q, dtype=float).reshape(3)


def chain_energy(geom, controls, q) -> float:
    ctl = chain_controls(controls)
    return float(sum(segment_energy(geom, c, float(qi)) for c, qi in zip(ctl, _qvec(q))))


def total_energy(state: ManipulatorState) -> float:
    return chain_energy(state.geom, state.controls, state.q)


# tip-moment balance ----------------------------------------------------------


def balance_weights(q) -> np.ndarray:
    """Weights w with w . M proportional to the tip moment of the joint torques."""
    _, q2, q3 = _qvec(q)
    s2, s3, s23 = math.sin(q2), math.sin(q3), math.sin(q2 + q3)
    return np.array([s3, -(s23 + s3), 2 * s2 + s23])


def balance_weight_partials(q) -> np.ndarray:
    """Row j holds d(balance_weights)/dq_j."""
    _, q2, q3 = _qvec(q)
    c2, c3, c23 = math.cos(q2), math.cos(q3), math.cos(q2 + q3)
    return np.array(
        [
            [0.0, 0.0, 0.0],
            [0.0, -c23, 2 * c2 + c23],
            [c3, -(c23 + c3), c23],
        ]
    )


def moment_balance(geom, controls, q) -> float:
    return float(balance_weights(q) @ chain_torques(geom, controls, q))


def is_straight_target(endpoint, b: float) -> bool:
    x, y = endpoint
    return abs(x - 6 * b) <= 1e-12 * b and abs(y) <= 1e-12 * b


# energy route ----------------------------------------------------------------


@dataclass(frozen=True)
class EnergySample:
    q1: float
    q2: float
    q3: float
    energy: float
    feasible: bool


def _distal(geom, endpoint, branch, q1):
    sol = inverse_kinematics(endpoint, q1, branch, geom.b, geom.q_max)
    if sol is None:
        return None
    return sol


def energy_curve(geom, controls, endpoint, branch: int, q1_grid=None) -> list[EnergySample]:
    """Energy of the shape family through a fixed tip point, sampled over q1.

    Points that are out of reach or break a joint limit are returned with
    ``feasible=False`` and NaN in place of the missing values.
    """
    ctl = _prepare(geom, controls)
    if q1_grid is None:
        q1_grid = np.linspace(-geom.q_max, geom.q_max, 2001)
    out = []
    for q1 in np.asarray(q1_grid, dtype=float):
        q1 = float(q1)
        sol = _distal(geom, endpoint, branch, q1)
        if sol is None:
            out.append(EnergySample(q1, math.nan, math.nan, math.nan, False))
            continue
        if not sol.within_limits:
            out.append(EnergySample(q1, sol.q2, sol.q3, math.nan, False))
            continue
        e = chain_energy(geom, ctl, (q1, sol.q2, sol.q3))
        out.append(EnergySample(q1, sol.q2, sol.q3, e, True))
    return out


def manifold_energy(geom, controls, endpoint, branch, q1) -> float:
    """Energy along the fixed-tip family, ignoring joint limits (NaN when unreachable)."""
    sol = _distal(geom, endpoint, branch, q1)
    if sol is None:
        return math.nan
    try:
        return chain_energy(geom, controls, (q1, sol.q2, sol.q3))
    except DomainError:
        return math.nan


def external_torque_me(geom, controls, endpoint, branch: int, q1: float) -> float | None:
    """Signed tip-moment residual along the fixed-tip family.

    Equals ``branch * w . M``.  Along the family ``dE/dq1 = -(w . M) / sin q3``
    so the returned value is ``-|sin q3| * dE/dq1``: it vanishes exactly at
    the stationary points and carries the sign of ``-dE/dq1`` elsewhere.
    Returns None for infeasible q1.
    """
    ctl = _prepare(geom, controls)
    sol = _distal(geom, endpoint, branch, q1)
    if sol is None or not sol.within_limits:
        return None
    return branch * moment_balance(geom, ctl, (q1, sol.q2, sol.q3))


def _signed_balance(geom, ctl, endpoint, branch):
    def f(q1):
        sol = _distal(geom, endpoint, branch, q1)
        if sol is None:
            return math.nan
        try:
            return branch * moment_balance(geom, ctl, (q1, sol.q2, sol.q3))
        except DomainError:
            return math.nan

    return f


def _curvature(geom, ctl, endpoint, branch, q1, h=CURVATURE_STEP) -> float:
    e0 = manifold_energy(geom, ctl, endpoint, branch, q1)
    ep = manifold_energy(geom, ctl, endpoint, branch, q1 + h)
    em = manifold_energy(geom, ctl, endpoint, branch, q1 - h)
    return (ep + em - 2 * e0) / (h * h)


def _straight_point(geom, ctl, branch) -> EquilibriumPoint:
    slopes = chain_torque_slopes(geom, ctl, (0.0, 0.0, 0.0))
    q = JointConfig(0.0, 0.0, 0.0, geom.q_max)
    return EquilibriumPoint(q, chain_energy(geom, ctl, (0.0, 0.0, 0.0)), bool(np.all(slopes < 0)), True, branch)


def find_equilibria(geom, controls, endpoint, branch: int, grid_n: int = 2001) -> list[EquilibriumPoint]:
    """Stationary points of the energy along the fixed-tip family.

    Minima are stable and maxima unstable.  The fully stretched tip
    position admits only the straight shape and is returned as a single
    degenerate point whose stability follows the joint stiffness at q = 0.
    """
    ctl = _prepare(geom, controls)
    if is_straight_target(endpoint, geom.b):
        return [_straight_point(geom, ctl, branch)]
    grid = np.linspace(-geom.q_max, geom.q_max, grid_n)
    curve = energy_curve(geom, ctl, endpoint, branch, grid)
    f = _signed_balance(geom, ctl, endpoint, branch)
    vals = np.array([f(s.q1) if s.feasible else math.nan for s in curve])
    out = []
    for q1 in roots_from_samples(f, grid, vals):
        sol = _distal(geom, endpoint, branch, q1)
        if sol is None:
            continue
        q = JointConfig(q1, sol.q2, sol.q3, geom.q_max)
        energy = chain_energy(geom, ctl, q)
        stable = _curvature(geom, ctl, endpoint, branch, q1) > 0.0
        out.append(EquilibriumPoint(q, energy, stable, q.feasible(), branch))
    return out


# wrench recovery ---------------------------------------------------------------


def wrench_closed_form(geom, controls, q) -> np.ndarray:
    b = geom.b
    q1, q2, q3 = _qvec(q)
    s1, s2, s3 = math.sin(q1), math.sin(q2), math.sin(q3)
    c1, c12 = math.cos(q1), math.cos(q1 + q2)
    s12, s23 = math.sin(q1 + q2), math.sin(q2 + q3)
    if abs(s2) <= S2_MIN:
        raise SingularConfigurationError(f"|sin q2| = {abs(s2):.3g} is too small for the closed-form wrench")
    n = np.array(
        [
            [c12, -c1 - c12, c1],
            [s12, -s1 - s12, s1],
            [b * s3, -b * s23 - b * s3, 2 * b * s2 + b * s23],
        ]
    )
    return -(n @ chain_torques(geom, controls, q)) / (2 * b * s2)


def wrench_linear_solve(geom, controls, q) -> np.ndarray:
    """Least-squares solution of J^T F = -M (minimum norm where J is singular)."""
    jt = jacobian(_qvec(q), geom.b).matrix.T
    return np.linalg.lstsq(jt, -chain_torques(geom, controls, q), rcond=None)[0]


def recover_wrench(geom, controls, q) -> PlanarWrench:
    """Tip wrench that holds the chain at ``q`` against its joint torques."""
    ctl = _prepare(geom, controls)
    closed = wrench_closed_form(geom, ctl, q)
    jt = jacobian(_qvec(q), geom.b).matrix.T
    m = chain_torques(geom, ctl, q)
    generic = np.linalg.solve(jt, -m)
    scale = np.linalg.norm(closed) + np.linalg.norm(m) / geom.b
    if np.linalg.norm(closed - generic) > 1e-9 * max(scale, 1e-300):
        raise SingularConfigurationError("closed-form and linear-solve wrenches disagree; Jacobian ill-conditioned")
    return PlanarWrench(float(closed[0]), float(closed[1]), float(closed[2]))


# torque route ------------------------------------------------------------------


def _loaded_residual(geom, ctl, endpoint):
    b, k = geom.b, geom.k
    x, y = endpoint

    def residual(qv):
        try:
            p = forward_kinematics(qv, b)
            g = moment_balance(geom, ctl, qv)
        except DomainError:
            return np.full(3, math.nan)
        return np.array([(p.x - x) / b, (p.y - y) / b, g / (k * b * b)])

    def derivative(qv):
        j = jacobian(qv, b).matrix
        m = chain_torques(geom, ctl, qv)
        dm = chain_torque_slopes(geom, ctl, qv)
        w = balance_weights(qv)
        dg = balance_weight_partials(qv) @ m + w * dm
        return np.vstack([j[0] / b, j[1] / b, dg / (k * b * b)])

    return residual, derivative


@dataclass(frozen=True)
class LoadedEquilibrium:
    point: EquilibriumPoint
    wrench: PlanarWrench
    residual: float
    iterations: int


def _stability_at(geom, ctl, endpoint, q: np.ndarray) -> bool:
    branch = 1 if q[2] >= 0 else -1
    curv = math.nan
    if not is_straight_target(endpoint, geom.b):
        curv = _curvature(geom, ctl, endpoint, branch, float(q[0]))
    if math.isfinite(curv):
        return curv > 0.0
    # tip at full reach: the family shrinks to a point, fall back to joint stiffness
    return bool(np.all(chain_torque_slopes(geom, ctl, q) < 0))


def _wrench_at(geom, ctl, q) -> PlanarWrench:
    if abs(math.sin(q[1])) > S2_MIN:
        return recover_wrench(geom, ctl, q)
    f = wrench_linear_solve(geom, ctl, q)
    return PlanarWrench(float(f[0]), float(f[1]), float(f[2]))


def solve_loaded_configuration(
    geom,
    controls,
    endpoint,
    branch: int,
    initial_guess,
    settings: SolverSettings | None = None,
) -> LoadedEquilibrium:
    """Equilibrium shape with the tip held at ``endpoint`` and no tip moment."""
    ctl = _prepare(geom, controls)
    guess = _qvec(initial_guess)
    if not JointConfig.from_array(guess, geom.q_max).feasible():
        raise InfeasibleError(f"initial guess {guess} violates the joint limit {geom.q_max:.6g}")
    residual, derivative = _loaded_residual(geom, ctl, endpoint)
    res = newton_solve(residual, derivative, guess, settings)
    if not res.converged:
        raise ConvergenceError(
            f"loaded equilibrium did not converge (residual {res.residual_norm:.3g})", res.residual_norm, res.trace
        )
    q = res.x
    cfg = JointConfig.from_array(q, geom.q_max)
    if not cfg.feasible():
        raise InfeasibleError(f"solution {q} lies outside the joint limit {geom.q_max:.6g}")
    branch_out = (1 if q[2] > 0 else -1) if q[2] != 0 else branch
    point = EquilibriumPoint(
        cfg,
        chain_energy(geom, ctl, q),
        _stability_at(geom, ctl, endpoint, q),
        True,
        branch_out,
    )
    return LoadedEquilibrium(point, _wrench_at(geom, ctl, q), res.residual_norm, res.iterations)


# force-deflection sweep --------------------------------------------------------


@dataclass(frozen=True)
class SweepRecord:
    deflection: float
    fx: float
    fy: float
    me: float
    q1: float
    q2: float
    q3: float
    stable: bool
    jump_flag: bool
    converged: bool


@dataclass
class SweepResult:
    records: list = field(default_factory=list)
    intercept: float = math.nan
    warnings: list = field(default_factory=list)
    controls: tuple = ()

    def converged(self) -> list:
        return [r for r in self.records if r.converged]


@dataclass(frozen=True)
class JumpSettings:
    factor: float = 10.0
    floor: float = 0.05  # rad; smaller changes are never treated as jumps


def buckled_guess(b: float, deflection: float, branch: int) -> np.ndarray:
    """Leading-order U-shaped configuration for a small axial shortening."""
    from .buckling import linearized_coefficients

    co = linearized_coefficients(+1)
    q2 = math.sqrt(max(deflection, 0.0) / (co.mu * b))
    return branch * q2 * np.array([co.alpha1, 1.0, co.alpha3])


def _target(start, direction, d):
    x0, y0 = start
    if direction == "x":
        return (x0 - d, y0)
    if direction == "y":
        return (x0, y0 + d)
    raise ValueError(f"direction must be 'x' or 'y', got {direction!r}")


def force_deflection_sweep(
    geom,
    controls,
    start_pose,
    direction: str,
    deflection_grid: Sequence[float],
    branch: int = 1,
    settings: SolverSettings | None = None,
    jumps: JumpSettings = JumpSettings(),
    initial_guess=None,
    unload_start: bool = False,
) -> SweepResult:
    """Impose a growing tip displacement and track the equilibrium by continuation.

    ``direction='x'`` moves the tip toward the base (shortening ``x0 - x``),
    ``direction='y'`` moves it sideways (``y - y0``).  Each converged shape is
    the starting guess for the next grid point.  The intercept is the force
    along the sweep axis extrapolated linearly to zero deflection over the
    converged points before the first jump.

    With ``unload_start`` a non-straight start shape is first made load
    free by splitting each segment's free lengths about their mean; the
    controls actually used are returned in ``result.controls``.
    """
    ctl = _prepare(geom, controls)
    result = SweepResult(controls=ctl)
    grid = [float(d) for d in deflection_grid]
    if not grid:
        return result
    b = geom.b
    straight = is_straight_target(start_pose, b)

    if initial_guess is not None:
        prev = _qvec(initial_guess)
    elif straight:
        prev = None
    elif unload_start:
        from .stiffness import profile_start

        prev, ctl = profile_start(geom, ctl, start_pose, branch)
        result.controls = ctl
    else:
        eq = [p for p in find_equilibria(geom, ctl, start_pose, branch) if p.stable and p.feasible]
        if not eq:
            raise InfeasibleError(f"no stable equilibrium at the start pose {tuple(start_pose)}")
        prev = min(eq, key=lambda p: p.energy).q.as_array()

    prev_d = None
    slope = None
    jumped = False
    fit_d, fit_f = [], []
    for d in grid:
        target = _target(start_pose, direction, d)
        at_straight = prev is None or float(np.max(np.abs(prev))) == 0.0
        if straight and at_straight and direction == "x":
            # the straight pose is a bifurcation point; seed the buckled branch
            guess = buckled_guess(b, d, branch)
        elif prev is not None:
            guess = prev
        else:
            guess = np.zeros(3)
        try:
            sol = solve_loaded_configuration(geom, ctl, target, branch, guess, settings)
        except (ConvergenceError, InfeasibleError, SingularConfigurationError, DomainError) as exc:
            result.records.append(
                SweepRecord(d, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, False, False, False)
            )
            result.warnings.append(f"deflection {d!r}: {type(exc).__name__}: {exc}")
            continue
        q = sol.point.q.as_array()
        jump = False
        if prev is not None and prev_d is not None:
            step = abs(d - prev_d)
            dq = float(np.max(np.abs(q - prev)))
            est = slope * step if slope is not None else 0.0
            jump = dq > jumps.factor * est and dq > jumps.floor
            slope = dq / step if step > 0 else slope
        if jump:
            jumped = True
        w = sol.wrench
        result.records.append(SweepRecord(d, w.fx, w.fy, w.me, q[0], q[1], q[2], sol.point.stable, jump, True))
        if not jumped and d > 0:
            fit_d.append(d)
            fit_f.append(w.fx if direction == "x" else w.fy)
        prev, prev_d = q, d

    if len(fit_d) >= 2:
        result.intercept = float(np.polyfit(fit_d, fit_f, 1)[1])
    elif len(fit_d) == 1:
        result.intercept = fit_f[0]
    return result
