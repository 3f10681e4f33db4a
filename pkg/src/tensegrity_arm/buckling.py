"""Linearised buckling of the straight chain.

Near the straight pose a tip shortening ``dx`` with ``dy = 0`` admits two
families of shapes proportional to q2: the U family (stable) and the Z
family (unstable).  The constants below follow from the quadratic that
links the ratios q1/q2 and q3/q2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .kinematics import JointConfig
from .segment import SegmentGeometry

SQRT21 = math.sqrt(21.0)


@dataclass(frozen=True)
class BucklingCoefficients:
    alpha1: float
    alpha3: float
    lam: float
    mu: float
    shape: str

    @property
    def stable_candidate(self) -> bool:
        return self.shape == "U"


def linearized_coefficients(root_sign: int) -> BucklingCoefficients:
    """Shape ratios for one root of the quadratic; +1 gives U, -1 gives Z."""
    if root_sign not in (1, -1):
        raise ValueError(f"root_sign must be +1 or -1, got {root_sign!r}")
    r = root_sign * SQRT21
    alpha1 = -(r + 11.0) / 20.0
    alpha3 = (r - 1.0) / 4.0
    lam = (alpha1 + alpha3 - 2.0) / 2.0
    mu = (r + 21.0) / 20.0
    return BucklingCoefficients(alpha1, alpha3, lam, mu, "U" if root_sign > 0 else "Z")


def constraint_residuals(alpha1: float, alpha3: float) -> tuple[float, float]:
    """Residuals of the zero-sideways-motion and zero-tip-moment conditions."""
    return 5.0 * alpha1 + 3.0 + alpha3, alpha1 * alpha3 - 1.0 + alpha3 + alpha3 * alpha3


def _stiffness_bracket(a: float, b: float, l0: float) -> float:
    return 2.0 * (b * b - a * a) - b * l0


def critical_force(geom: SegmentGeometry, l0: float) -> tuple[float, float]:
    """Axial tip force at the onset of the U and Z shapes, ``(F_U, F_Z)``.

    The straight pose is stable exactly when ``F_U < 0``.
    """
    if not geom.is_symmetric:
        raise DomainError("critical force is defined for symmetric segments only")
    a, b, k = geom.a, geom.b, geom.k
    br = _stiffness_bracket(a, b, l0)
    return tuple(-linearized_coefficients(s).lam * (k / b) * br for s in (1, -1))  # type: ignore[return-value]


def deflection_coefficient(shape: str) -> float:
    """mu in ``dx = mu * b * q2**2``."""
    if shape == "U":
        return linearized_coefficients(1).mu
    if shape == "Z":
        return linearized_coefficients(-1).mu
    raise ValueError(f"shape must be 'U' or 'Z', got {shape!r}")


def linearized_force(geom: SegmentGeometry, l0: float, q1: float, q2: float, q3: float) -> tuple[float, float]:
    """Leading-order tip force ``(Fx, Fy)`` for a small shape ``(q1, q2, q3)``."""
    if q2 == 0.0:
        raise DomainError("q2 must be nonzero")
    a, b, k = geom.a, geom.b, geom.k
    fx = -(k / (2.0 * b * q2)) * _stiffness_bracket(a, b, l0) * (q1 + q3 - 2.0 * q2)
    return fx, 0.0


def shape_force(geom: SegmentGeometry, l0: float, q2: float, root_sign: int = 1) -> float:
    """Axial force on a ratio-consistent shape of amplitude q2."""
    co = linearized_coefficients(root_sign)
    return linearized_force(geom, l0, co.alpha1 * q2, q2, co.alpha3 * q2)[0]


_PATTERNS = {
    (-1, 1, 1): "U",
    (1, -1, -1): "U",
    (-1, 1, -1): "Z",
    (1, -1, 1): "Z",
}


def classify_shape(q) -> str:
    if isinstance(q, JointConfig):
        q = (q.q1, q.q2, q.q3)
    signs = tuple(int(math.copysign(1, v)) if v != 0 else 0 for v in q)
    return _PATTERNS.get(signs, "other")
