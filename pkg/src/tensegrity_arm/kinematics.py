"""Kinematics of the three-segment chain.

With half-link ``b`` the chain reads, from the base: a fixed offset ``b``,
two links of length ``2b`` and a last link of length ``b``.  Joint angles
are relative, so the absolute heading of link i is q1 + ... + qi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

C3_CLAMP = 1e-12


@dataclass(frozen=True)
class JointConfig:
    q1: float
    q2: float
    q3: float
    q_max: float = math.pi

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.q3], dtype=float)

    @classmethod
    def from_array(cls, q, q_max: float = math.pi) -> "JointConfig":
        return cls(float(q[0]), float(q[1]), float(q[2]), q_max)

    def feasible(self, tol: float = 1e-12) -> bool:
        lim = self.q_max * (1 + tol)
        return all(math.isfinite(v) and abs(v) <= lim for v in (self.q1, self.q2, self.q3))

    def mirrored(self) -> "JointConfig":
        return JointConfig(-self.q1, -self.q2, -self.q3, self.q_max)


@dataclass(frozen=True)
class PlanarPose:
    x: float
    y: float
    phi: float


@dataclass(frozen=True)
class ChainJacobian:
    matrix: np.ndarray

    @property
    def translational(self) -> np.ndarray:
        return self.matrix[:2, :]


def _angles(q):
    if isinstance(q, JointConfig):
        return q.q1, q.q2, q.q3
    q1, q2, q3 = (float(v) for v in q)
    return q1, q2, q3


def _check_b(b: float):
    if not (math.isfinite(b) and b > 0.0):
        raise DomainError(f"b must be a positive finite number, got {b!r}")


def forward_kinematics(q, b: float) -> PlanarPose:
    _check_b(b)
    q1, q2, q3 = _angles(q)
    t1, t12, t123 = q1, q1 + q2, q1 + q2 + q3
    x = b + 2 * b * math.cos(t1) + 2 * b * math.cos(t12) + b * math.cos(t123)
    y = 2 * b * math.sin(t1) + 2 * b * math.sin(t12) + b * math.sin(t123)
    return PlanarPose(x, y, t123)


@dataclass(frozen=True)
class InverseSolution:
    q2: float
    q3: float
    within_limits: bool


def inverse_kinematics(pose_xy, q1: float, branch: int, b: float, q_max: float = math.pi) -> InverseSolution | None:
    """Distal angles (q2, q3) that put the tip at ``pose_xy`` for a given q1.

    ``branch`` selects the sign of q3 (+1 or -1).  Returns None when the
    point is out of reach of the last two links; joint-limit violations are
    reported through ``within_limits`` instead.
    """
    _check_b(b)
    if branch not in (1, -1):
        raise ValueError(f"branch must be +1 or -1, got {branch!r}")
    x, y = pose_xy
    dx = x - b - 2 * b * math.cos(q1)
    dy = y - 2 * b * math.sin(q1)
    r2 = dx * dx + dy * dy
    c3 = (r2 - 5 * b * b) / (4 * b * b)
    if abs(c3) > 1 + C3_CLAMP or not math.isfinite(c3):
        return None
    c3 = max(-1.0, min(1.0, c3))
    # (1 - C3)(1 + C3) written in r2 keeps digits near the straight pose
    prod = (9 * b * b - r2) * (r2 - b * b)
    s3 = branch * math.sqrt(max(prod, 0.0)) / (4 * b * b)
    q3 = math.atan2(s3, c3)
    q2 = math.atan2(dy, dx) - math.atan2(b * s3, 2 * b + b * c3) - q1
    q2 = math.remainder(q2, 2 * math.pi)
    ok = all(abs(v) <= q_max * (1 + 1e-12) for v in (q1, q2, q3))
    return InverseSolution(q2, q3, ok)


def jacobian(q, b: float) -> ChainJacobian:
    _check_b(b)
    q1, q2, q3 = _angles(q)
    t1, t12, t123 = q1, q1 + q2, q1 + q2 + q3
    s1, s12, s123 = math.sin(t1), math.sin(t12), math.sin(t123)
    c1, c12, c123 = math.cos(t1), math.cos(t12), math.cos(t123)
    m = np.array(
        [
            [-2 * b * s1 - 2 * b * s12 - b * s123, -2 * b * s12 - b * s123, -b * s123],
            [2 * b * c1 + 2 * b * c12 + b * c123, 2 * b * c12 + b * c123, b * c123],
            [1.0, 1.0, 1.0],
        ]
    )
    return ChainJacobian(m)


def jacobian_partials(q, b: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Derivatives of the Jacobian matrix with respect to q1, q2 and q3.

    Column j of J sums over the links distal to joint j, and joint i turns
    the links distal to it, so entry (r, j) of dJ/dqi sums over the links
    distal to both joints.  The result is symmetric in (i, j).
    """
    _check_b(b)
    q1, q2, q3 = _angles(q)
    heads = (q1, q1 + q2, q1 + q2 + q3)
    lengths = (2 * b, 2 * b, b)
    out = []
    for i in range(3):
        d = np.zeros((3, 3))
        for j in range(3):
            # links that move with both joint i and joint j
            for link in range(max(i, j), 3):
                d[0, j] -= lengths[link] * math.cos(heads[link])
                d[1, j] -= lengths[link] * math.sin(heads[link])
        out.append(d)
    return out[0], out[1], out[2]


def small_angle_deflection(q, b: float) -> tuple[float, float]:
    """Second-order tip displacement from the straight pose.

    Returns ``(dx, dy)`` with ``dx = x0 - x`` (shortening) and ``dy = y - y0``.
    """
    q1, q2, q3 = _angles(q)
    t12, t123 = q1 + q2, q1 + q2 + q3
    dx = b * (q1 * q1 + t12 * t12 + 0.5 * t123 * t123)
    dy = 2 * b * (q1 + t12 + 0.5 * t123)
    return dx, dy


def straight_reach(b: float) -> float:
    return 6.0 * b
