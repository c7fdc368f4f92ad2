"""Points of the Riemann sphere.

Finite points are plain ``complex`` values; the point at infinity is the
module constant ``INF``. Use :func:`is_inf` rather than ``==`` to test for it.
"""

from __future__ import annotations

import cmath
import math

INF = complex(math.inf, 0.0)


def is_inf(z: complex) -> bool:
    return cmath.isinf(z)


def point(z) -> complex:
    """Coerce a number (or ``None``/``"inf"``) to a sphere point."""
    if z is None or (isinstance(z, str) and z.lower() in ("inf", "infinity")):
        return INF
    z = complex(z)
    return INF if is_inf(z) else z


def chordal_distance(z: complex, w: complex) -> float:
    """Chordal metric on the sphere; the diameter of the sphere is 2."""
    zi, wi = is_inf(z), is_inf(w)
    if zi and wi:
        return 0.0
    if zi:
        return 2.0 / math.sqrt(1.0 + abs(w) ** 2)
    if wi:
        return 2.0 / math.sqrt(1.0 + abs(z) ** 2)
    return 2.0 * abs(z - w) / math.sqrt((1.0 + abs(z) ** 2) * (1.0 + abs(w) ** 2))


def chordal_distance_pair(p: complex, q: complex, w: complex) -> float:
    """Chordal distance between the projective point ``[p:q]`` and ``w``."""
    if is_inf(w):
        return 2.0 * abs(q) / math.hypot(abs(p), abs(q))
    return 2.0 * abs(p - w * q) / (math.hypot(abs(p), abs(q)) * math.sqrt(1.0 + abs(w) ** 2))


def from_pair(p: complex, q: complex) -> complex:
    """The sphere point ``p / q``. ``q == 0`` gives ``INF``."""
    if q == 0:
        return INF
    return p / q


def to_json(z: complex):
    return "inf" if is_inf(z) else [z.real, z.imag]


def from_json(obj) -> complex:
    if isinstance(obj, str):
        return point(obj)
    re, im = obj
    return complex(re, im)
