"""Reference computations written independently of the package formulas.

Spring lengths come from explicit triangle corner coordinates, torques from
differentiating the resulting energy numerically, and tip positions from
complex link-vector sums.
"""

import cmath
import math

import numpy as np


def _rot(q, p):
    c, s = math.cos(q), math.sin(q)
    return np.array([c * p[0] - s * p[1], s * p[0] + c * p[1]])


def corner_spring_lengths(a1, b1, a2, b2, q):
    """(left, right) spring lengths: upper triangle (+-a1, b1) turned by q, lower (+-a2, -b2)."""
    left = np.linalg.norm(_rot(q, (-a1, b1)) - np.array([-a2, -b2]))
    right = np.linalg.norm(_rot(q, (a1, b1)) - np.array([a2, -b2]))
    return left, right


def corner_energy(a1, b1, a2, b2, k1, k2, l01, l02, q):
    left, right = corner_spring_lengths(a1, b1, a2, b2, q)
    return 0.5 * k1 * (left - l01) ** 2 + 0.5 * k2 * (right - l02) ** 2


def corner_torque(a1, b1, a2, b2, k1, k2, l01, l02, q, h=1e-6):
    e = lambda t: corner_energy(a1, b1, a2, b2, k1, k2, l01, l02, t)
    return -(e(q + h) - e(q - h)) / (2 * h)


def chain_corner_energy(a, b, k, springs, q):
    """springs: three (l01, l02) pairs."""
    return sum(corner_energy(a, b, a, b, k, k, s[0], s[1], qi) for s, qi in zip(springs, q))


def tip_position(q, b):
    t1 = q[0]
    t2 = q[0] + q[1]
    t3 = q[0] + q[1] + q[2]
    z = b + 2 * b * cmath.exp(1j * t1) + 2 * b * cmath.exp(1j * t2) + b * cmath.exp(1j * t3)
    return z.real, z.imag


def rel_err(a, b, floor=1.0):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), floor))
