"""Joint and Cartesian stiffness of the chain, unloaded and under a tip force.

Joint torques here use the per-segment form written directly in the two
free lengths, which is an independent code path from the spring-by-spring
evaluation in :mod:`tensegrity_arm.segment`.

Sign convention: ``M(q) + J^T F = 0`` at equilibrium, with F the applied
tip wrench.  Joint stiffness is ``K_theta = -dM/dq`` so a stable straight
segment has positive stiffness, and a force increment moves the tip by
``J (K_theta - K_g)^-1 J^T dF``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import is_straight_target, chain_controls, find_equilibria
from .errors import (
    ConvergenceError,
    DomainError,
    InfeasibleError,
    QuasiBucklingError,
    SingularConfigurationError,
)
from .kinematics import JointConfig, forward_kinematics, jacobian, jacobian_partials
from .numerics import MAX_CONDITION, SolverSettings, condition_number, inverse_small, newton_solve
from .segment import SegmentControls, SegmentGeometry


@dataclass(frozen=True)
class JointTorques:
    m1: float
    m2: float
    m3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.m1, self.m2, self.m3])


@dataclass(frozen=True)
class StiffnessSet:
    k_theta: np.ndarray
    kg: np.ndarray
    cf: np.ndarray
    kf: np.ndarray
    condition: float
    min_eigenvalue: float


def _q(q) -> np.ndarray:
    if isinstance(q, JointConfig):
        return q.as_array()
    return np.asarray(q, dtype=float).reshape(3)


def _wrench(w) -> np.ndarray:
    if hasattr(w, "as_array"):
        return w.as_array()
    w = np.asarray(w, dtype=float).ravel()
    if w.size == 2:
        w = np.append(w, 0.0)
    if w.size != 3:
        raise ValueError("wrench must have 2 or 3 components")
    return w


def _abk(geom: SegmentGeometry):
    if not geom.is_symmetric:
        raise DomainError("stiffness model needs symmetric segments")
    return geom.a, geom.b, geom.k


def _segment_moment(a, b, k, l1, l2, q):
    ch, sh = math.cos(0.5 * q), math.sin(0.5 * q)
    return 2 * k * (b * b - a * a) * math.sin(q) - k * l1 * (a * ch + b * sh) + k * l2 * (a * ch - b * sh)


def _segment_moment_slope(a, b, k, l1, l2, q):
    ch, sh = math.cos(0.5 * q), math.sin(0.5 * q)
    return 2 * k * (b * b - a * a) * math.cos(q) - 0.5 * k * l1 * (b * ch - a * sh) - 0.5 * k * l2 * (a * sh + b * ch)


def joint_torques(geom, controls, q) -> JointTorques:
    a, b, k = _abk(geom)
    ctl = chain_controls(controls)
    m = [_segment_moment(a, b, k, c.l01, c.l02, float(qi)) for c, qi in zip(ctl, _q(q))]
    return JointTorques(*m)


def joint_stiffness(geom, controls, q) -> np.ndarray:
    """Diagonal matrix of ``-dM_i/dq_i``."""
    a, b, k = _abk(geom)
    ctl = chain_controls(controls)
    return np.diag([-_segment_moment_slope(a, b, k, c.l01, c.l02, float(qi)) for c, qi in zip(ctl, _q(q))])


def loading_influence(geom, q, wrench) -> np.ndarray:
    """Matrix whose column i is ``(dJ/dq_i)^T F``."""
    f = _wrench(wrench)
    parts = jacobian_partials(_q(q), geom.b)
    return np.column_stack([d.T @ f for d in parts])


def _translational(geom, q) -> np.ndarray:
    j2 = jacobian(_q(q), geom.b).translational
    sv = np.linalg.svd(j2, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise SingularConfigurationError(
            "translational Jacobian is rank deficient (e.g. straight pose); use the buckling analysis there"
        )
    return j2


def unloaded_cartesian(geom, controls, q) -> tuple[np.ndarray, np.ndarray]:
    """Tip compliance and stiffness with no external load, ``(cf0, kf0)``.

    ``q`` should be an unloaded equilibrium of ``controls``.
    """
    j2 = _translational(geom, q)
    kth = np.diag(joint_stiffness(geom, controls, q))
    if np.any(np.abs(kth) <= 1e-300):
        raise SingularConfigurationError("a joint stiffness is zero")
    inv = 1.0 / kth
    cxx = float(np.sum(j2[0] ** 2 * inv))
    cyy = float(np.sum(j2[1] ** 2 * inv))
    cxy = float(np.sum(j2[0] * j2[1] * inv))
    closed = np.array([[cxx, cxy], [cxy, cyy]])
    product = j2 @ np.diag(inv) @ j2.T
    if np.max(np.abs(closed - product)) > 1e-12 * max(np.max(np.abs(product)), 1e-300):
        raise ArithmeticError("closed-form compliance disagrees with the matrix product")
    return closed, inverse_small(closed)


def equilibrium_residual(geom, controls, q, wrench) -> np.ndarray:
    """``M(q) + J^T F`` scaled by ``1 / (k b^2)``."""
    a, b, k = _abk(geom)
    m = joint_torques(geom, controls, q).as_array()
    return (m + jacobian(_q(q), b).matrix.T @ _wrench(wrench)) / (k * b * b)


def loaded_stiffness(geom, controls, q_loaded, wrench, residual_tolerance: float = 1e-8) -> StiffnessSet:
    q = _q(q_loaded)
    f = _wrench(wrench)
    res = np.linalg.norm(equilibrium_residual(geom, controls, q, f))
    if res > residual_tolerance:
        raise DomainError(f"(q, wrench) is not an equilibrium: scaled residual {res:.3g}")
    kth = joint_stiffness(geom, controls, q)
    kg = loading_influence(geom, q, f)
    keff = kth - kg
    cond = condition_number(keff)
    if not math.isfinite(cond) or cond > MAX_CONDITION:
        raise QuasiBucklingError(f"K_theta - K_g is singular (cond={cond:.3g})")
    j2 = _translational(geom, q)
    cf = j2 @ np.linalg.solve(keff, j2.T)
    kf = inverse_small(cf)
    mine = float(np.linalg.eigvalsh(0.5 * (keff + keff.T))[0])
    return StiffnessSet(kth, kg, cf, kf, cond, mine)


def solve_force_equilibrium(geom, controls, force, guess, settings: SolverSettings | None = None) -> np.ndarray:
    """Shape of the chain under a prescribed tip force (force control)."""
    a, b, k = _abk(geom)
    f = _wrench(force)
    ctl = chain_controls(controls)

    def residual(qv):
        if np.any(np.abs(qv) > geom.collision_limit):
            return np.full(3, math.nan)
        return equilibrium_residual(geom, ctl, qv, f)

    def derivative(qv):
        return -(joint_stiffness(geom, ctl, qv) - loading_influence(geom, qv, f)) / (k * b * b)

    res = newton_solve(residual, derivative, _q(guess), settings)
    if not res.converged:
        raise ConvergenceError(f"force equilibrium did not converge (residual {res.residual_norm:.3g})",
                               res.residual_norm, res.trace)
    return res.x


def unloading_controls(geom, l0, q) -> tuple:
    """Per-segment free lengths that make ``q`` an unloaded equilibrium.

    Each segment keeps the mean free length ``l0`` and splits it as
    ``l0 + d`` / ``l0 - d``.  ``l0`` may be a scalar or one value per segment.
    """
    a, b, k = _abk(geom)
    qv = _q(q)
    l0s = np.broadcast_to(np.asarray(l0, dtype=float), (3,))
    out = []
    for li, qi in zip(l0s, qv):
        m_sym = _segment_moment(a, b, k, li, li, qi)
        d = m_sym / (2 * k * a * math.cos(0.5 * qi))
        c = SegmentControls(float(li + d), float(li - d))
        c.check_against(geom)
        out.append(c)
    return tuple(out)


@dataclass(frozen=True)
class ProfileRecord:
    f_applied: float
    q1: float
    q2: float
    q3: float
    kxx: float
    kyy: float
    deflection: float
    min_eigenvalue: float
    condition: float
    quasi_buckling_flag: bool
    converged: bool


@dataclass
class StiffnessProfile:
    records: list = field(default_factory=list)
    start_q: np.ndarray | None = None
    controls: tuple = ()
    warnings: list = field(default_factory=list)


@dataclass(frozen=True)
class QuasiBucklingRule:
    collapse_ratio: float = 0.1  # Kxx below this fraction of its first value
    limit_ratio: float = 0.95  # |q_i| above this fraction of the joint limit
    jump_rad: float = 0.2


def profile_start(geom, controls, start_endpoint, branch: int = 1) -> tuple[np.ndarray, tuple]:
    """Lowest-energy stable shape at the start point and controls that unload it."""
    ctl = chain_controls(controls)
    if is_straight_target(start_endpoint, geom.b):
        raise SingularConfigurationError("the straight pose has no tip stiffness in x; start elsewhere")
    eqs = [p for p in find_equilibria(geom, ctl, start_endpoint, branch) if p.stable and p.feasible]
    if not eqs:
        raise InfeasibleError(f"no stable equilibrium at {tuple(start_endpoint)} on branch {branch:+d}")
    q0 = min(eqs, key=lambda p: p.energy).q.as_array()
    means = [0.5 * (c.l01 + c.l02) for c in ctl]
    return q0, unloading_controls(geom, means, q0)


def stiffness_profile(
    geom,
    controls,
    start_endpoint=(5.5, 0.0),
    force_axis: str = "x",
    force_grid=(),
    branch: int = 1,
    settings: SolverSettings | None = None,
    rule: QuasiBucklingRule = QuasiBucklingRule(),
) -> StiffnessProfile:
    """Tip stiffness along a family of growing tip forces.

    The start shape is the stable equilibrium with the tip at
    ``start_endpoint``.  Each segment's free lengths are then split about
    their mean so that this shape carries no load, after which the tip
    force is applied on ``force_axis`` and followed by continuation.
    """
    if force_axis not in ("x", "y"):
        raise ValueError(f"force_axis must be 'x' or 'y', got {force_axis!r}")
    out = StiffnessProfile()
    grid = [float(f) for f in force_grid]
    if not grid:
        return out
    q0, ctl = profile_start(geom, controls, start_endpoint, branch)
    out.start_q, out.controls = q0, ctl
    p0 = forward_kinematics(q0, geom.b)
    axis = 0 if force_axis == "x" else 1
    prev = q0.copy()
    kxx_ref = None
    for fval in grid:
        force = np.zeros(3)
        force[axis] = fval
        try:
            q = solve_force_equilibrium(geom, ctl, force, prev, settings)
            st = loaded_stiffness(geom, ctl, q, force)
        except (ConvergenceError, SingularConfigurationError, DomainError) as exc:
            out.records.append(
                ProfileRecord(fval, *([math.nan] * 8), True, False)
            )
            out.warnings.append(f"force {fval!r}: {type(exc).__name__}: {exc}")
            continue
        kxx, kyy = float(st.kf[0, 0]), float(st.kf[1, 1])
        if kxx_ref is None:
            kxx_ref = kxx
        p = forward_kinematics(q, geom.b)
        defl = (p.x - p0.x) if axis == 0 else (p.y - p0.y)
        jump = float(np.max(np.abs(q - prev))) > rule.jump_rad
        flag = (
            jump
            or st.min_eigenvalue <= 0.0
            or st.condition > MAX_CONDITION
            or kxx < rule.collapse_ratio * kxx_ref
            or float(np.max(np.abs(q))) > rule.limit_ratio * geom.q_max
        )
        out.records.append(ProfileRecord(fval, q[0], q[1], q[2], kxx, kyy, defl, st.min_eigenvalue, st.condition,
                                         bool(flag), True))
        prev = q
    return out
