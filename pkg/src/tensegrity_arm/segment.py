"""Mechanics of one dual-triangle segment.

Two rigid triangles share a passive revolute joint and are tied together by
two linear springs, one on each side.  Side 1 sees the opening angle
``beta12 + q`` and side 2 sees ``beta12 - q``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import DomainError
from .numerics import bracketed_roots

log = logging.getLogger(__name__)

_REL = 1e-12


def _close(x: float, y: float) -> bool:
    return abs(x - y) <= _REL * max(abs(x), abs(y), 1.0)


@dataclass(frozen=True)
class SegmentGeometry:
    a1: float
    b1: float
    a2: float
    b2: float
    k1: float
    k2: float
    joint_limit: float | None = None  # None -> collision limit pi - beta12

    def __post_init__(self):
        for name in ("a1", "b1", "a2", "b2", "k1", "k2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"{name} must be a positive finite number, got {v!r}")
        if self.joint_limit is not None:
            if not 0.0 < self.joint_limit <= self.collision_limit * (1 + _REL):
                raise DomainError(
                    f"joint_limit must lie in (0, {self.collision_limit:.6g}], got {self.joint_limit!r}"
                )

    @classmethod
    def symmetric(cls, a: float, b: float, k: float = 1.0, joint_limit: float | None = None):
        return cls(a, b, a, b, k, k, joint_limit)

    @property
    def c1(self) -> float:
        return math.hypot(self.a1, self.b1)

    @property
    def c2(self) -> float:
        return math.hypot(self.a2, self.b2)

    @property
    def beta12(self) -> float:
        return math.atan(self.a1 / self.b1) + math.atan(self.a2 / self.b2)

    @property
    def collision_limit(self) -> float:
        return math.pi - self.beta12

    @property
    def q_max(self) -> float:
        return self.collision_limit if self.joint_limit is None else self.joint_limit

    @property
    def is_symmetric(self) -> bool:
        return _close(self.a1, self.a2) and _close(self.b1, self.b2) and _close(self.k1, self.k2)

    def _require_symmetric(self):
        if not self.is_symmetric:
            raise DomainError("operation is only defined for symmetric segments (a1=a2, b1=b2, k1=k2)")

    @property
    def a(self) -> float:
        self._require_symmetric()
        return self.a1

    @property
    def b(self) -> float:
        self._require_symmetric()
        return self.b1

    @property
    def k(self) -> float:
        self._require_symmetric()
        return self.k1


@dataclass(frozen=True)
class SegmentControls:
    """Free (unstretched) lengths of the two springs."""

    l01: float
    l02: float

    def __post_init__(self):
        for name in ("l01", "l02"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"{name} must be a positive finite number, got {v!r}")

    @classmethod
    def symmetric(cls, l0: float):
        return cls(l0, l0)

    @property
    def is_symmetric(self) -> bool:
        return _close(self.l01, self.l02)

    def swapped(self) -> "SegmentControls":
        return SegmentControls(self.l02, self.l01)

    def check_against(self, geom: SegmentGeometry):
        limit = geom.c1 + geom.c2
        for name in ("l01", "l02"):
            if getattr(self, name) >= limit:
                raise DomainError(f"{name}={getattr(self, name)!r} must be below c1+c2={limit:.6g}")


@dataclass(frozen=True)
class SpringState:
    theta: float
    length: float
    force: float
    moment_arm: float


def _side_sign(side: int) -> int:
    if side == 1:
        return 1
    if side == 2:
        return -1
    raise ValueError(f"side must be 1 or 2, got {side!r}")


def _spring_length(c1: float, c2: float, theta: float) -> float:
    if _close(c1, c2):
        return 2.0 * c1 * math.cos(0.5 * theta)
    sq = c1 * c1 + c2 * c2 + 2.0 * c1 * c2 * math.cos(theta)
    return math.sqrt(max(sq, 0.0))


def _moment_arm(c1: float, c2: float, theta: float, length: float) -> float:
    if _close(c1, c2):
        # c^2 sin(theta) / (2c cos(theta/2)) without the 0/0 at theta = pi
        return c1 * math.sin(0.5 * theta)
    return c1 * c2 * math.sin(theta) / length


def _moment_arm_slope(c1: float, c2: float, theta: float, length: float) -> float:
    if _close(c1, c2):
        return 0.5 * c1 * math.cos(0.5 * theta)
    s = math.sin(theta)
    return c1 * c2 * (math.cos(theta) / length + c1 * c2 * s * s / length**3)


def _check_angle(geom: SegmentGeometry, q: float):
    if not math.isfinite(q):
        raise DomainError(f"joint angle must be finite, got {q!r}")
    lim = geom.collision_limit
    if abs(q) > lim * (1 + 1e-9):
        raise DomainError(f"|q|={abs(q):.6g} exceeds the triangle collision limit {lim:.6g}")


def spring_state(geom: SegmentGeometry, side: int, controls: SegmentControls, q: float) -> SpringState:
    sign = _side_sign(side)
    _check_angle(geom, q)
    c1, c2 = geom.c1, geom.c2
    theta = geom.beta12 + sign * q
    length = _spring_length(c1, c2, theta)
    if length < abs(c1 - c2) - 1e-12 * (c1 + c2):
        raise DomainError("spring length fell below |c1 - c2|; geometry is inconsistent")
    k = geom.k1 if side == 1 else geom.k2
    l0 = controls.l01 if side == 1 else controls.l02
    return SpringState(theta, length, k * (length - l0), _moment_arm(c1, c2, theta, length))


def segment_torque(geom: SegmentGeometry, controls: SegmentControls, q: float) -> float:
    """Net spring torque at the passive joint (positive counter-clockwise)."""
    s1 = spring_state(geom, 1, controls, q)
    s2 = spring_state(geom, 2, controls, q)
    return s1.force * s1.moment_arm - s2.force * s2.moment_arm


def segment_torque_derivative(geom: SegmentGeometry, controls: SegmentControls, q: float) -> float:
    _check_angle(geom, q)
    c1, c2 = geom.c1, geom.c2
    cc = c1 * c2
    th1 = geom.beta12 + q
    th2 = geom.beta12 - q
    l1 = _spring_length(c1, c2, th1)
    l2 = _spring_length(c1, c2, th2)
    d1 = geom.k1 * (cc * math.cos(th1) - controls.l01 * _moment_arm_slope(c1, c2, th1, l1))
    d2 = geom.k2 * (cc * math.cos(th2) - controls.l02 * _moment_arm_slope(c1, c2, th2, l2))
    return d1 + d2


def segment_energy(geom: SegmentGeometry, controls: SegmentControls, q: float, m_ext: float = 0.0) -> float:
    """Elastic energy of both springs minus the work of a constant external torque."""
    s1 = spring_state(geom, 1, controls, q)
    s2 = spring_state(geom, 2, controls, q)
    e = 0.5 * (s1.force * (s1.length - controls.l01) + s2.force * (s2.length - controls.l02))
    return e - m_ext * q


# Closed forms valid only for symmetric segments with equal controls.  They
# are separate code paths, kept for cross-checking the general expressions.


def symmetric_torque(a: float, b: float, k: float, l0: float, q: float) -> float:
    return 2.0 * k * ((b * b - a * a) * math.sin(q) - b * l0 * math.sin(0.5 * q))


def symmetric_torque_cb(c: float, beta: float, k: float, l0: float, q: float) -> float:
    return c * k * (2.0 * c * math.cos(beta) * math.sin(q) - 2.0 * l0 * math.cos(0.5 * beta) * math.sin(0.5 * q))


def symmetric_torque_derivative_cb(c: float, beta: float, k: float, l0: float, q: float) -> float:
    return c * k * (2.0 * c * math.cos(beta) * math.cos(q) - l0 * math.cos(0.5 * beta) * math.cos(0.5 * q))


def straight_stability_margin(a: float, b: float, l0: float) -> float:
    """l0 minus the smallest free length that keeps the straight pose stable."""
    return l0 - 2.0 * b * (1.0 - (a / b) ** 2)


def is_straight_config_stable(geom: SegmentGeometry, controls: SegmentControls) -> tuple[bool, float]:
    """Stability of q = 0 for a symmetric segment; returns ``(stable, margin)``."""
    if not (geom.is_symmetric and controls.is_symmetric):
        raise DomainError("straight-pose stability test needs symmetric geometry and equal controls")
    margin = straight_stability_margin(geom.a, geom.b, controls.l01)
    return margin > 0.0, margin


@dataclass(frozen=True)
class SegmentEquilibrium:
    q: float
    stable: bool


def segment_equilibria(
    geom: SegmentGeometry,
    controls: SegmentControls,
    m_ext: float = 0.0,
    grid_n: int = 2001,
) -> list[SegmentEquilibrium]:
    """All equilibria of one segment under a constant external torque.

    Searches ``[-q_max, q_max]``.  An empty list means ``M + m_ext`` did not
    change sign anywhere on the grid.
    """
    lim = geom.q_max

    def f(q):
        return segment_torque(geom, controls, q) + m_ext

    roots = bracketed_roots(f, -lim, lim, grid_n)
    if not roots:
        log.info("no root bracketed on [%.6g, %.6g]: f(lo)=%.6g f(hi)=%.6g", -lim, lim, f(-lim), f(lim))
    return [SegmentEquilibrium(q, segment_torque_derivative(geom, controls, q) < 0.0) for q in roots]
