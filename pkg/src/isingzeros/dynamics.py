"""The rational map ``f(R) = xi * g(R)**d`` with ``g(R) = (R + b)/(bR + 1)``.

On the unit circle everything is handled through angles. For real ``b``
the Moebius map ``g`` sends ``e^{i phi}`` to ``e^{i psi(phi)}`` where
``psi`` is continuous on ``(-pi, pi)``, odd, increasing for ``b < 1`` and
decreasing for ``b > 1``. The circle map lifts to ``phi -> arg(xi) + d psi(phi)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .sphere import INF, chordal_distance, is_inf

HIT_TOL = 1e-9
ZERO_PARAM_TOL = 1e-8
_UNIT_TOL = 1e-12


class DomainError(ValueError):
    """Parameters outside the range where a quantity is defined."""


class NoAttractingPointError(RuntimeError):
    pass


class InvarianceError(RuntimeError):
    """The image of a proposed invariant arc leaves the arc."""


@dataclass(frozen=True)
class DynamicsParams:
    xi: complex
    b: float
    d: int

    def __post_init__(self):
        if not (self.b > 0 and math.isfinite(self.b)):
            raise DomainError(f"b must be a positive real, got {self.b}")
        if self.b == 1:
            raise DomainError("b = 1 makes g constant; it is excluded")
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"d must be an integer >= 2, got {self.d}")
        object.__setattr__(self, "xi", complex(self.xi))

    @classmethod
    def on_circle(cls, theta: float, b: float, d: int) -> "DynamicsParams":
        return cls(cmath.exp(1j * theta), b, d)

    @property
    def theta(self) -> float:
        return cmath.phase(self.xi)

    def require_unit(self) -> None:
        if abs(abs(self.xi) - 1) > _UNIT_TOL:
            raise DomainError(f"|xi| must be 1 for circle dynamics, got {abs(self.xi)}")


# -- the maps ----------------------------------------------------------------

def mobius_g(R: complex, b: float) -> complex:
    if is_inf(R):
        return INF if b == 0 else complex(1 / b)
    den = b * R + 1
    if den == 0:
        return INF
    return (R + b) / den


def apply_f(R: complex, p: DynamicsParams) -> complex:
    g = mobius_g(R, p.b)
    if is_inf(g):
        return INF
    return p.xi * g ** p.d


def f_derivative(R: complex, p: DynamicsParams) -> complex:
    if is_inf(R):
        raise DomainError("f' is evaluated at finite points only")
    den = p.b * R + 1
    if den == 0:
        raise DomainError(f"f' has a pole at R = -1/b = {-1 / p.b}")
    g = (R + p.b) / den
    return p.xi * p.d * g ** (p.d - 1) * (1 - p.b ** 2) / den ** 2


def critical_b(d: int) -> float:
    if d < 2:
        raise DomainError(f"d must be >= 2, got {d}")
    return (d - 1) / (d + 1)


def wrap(x):
    """Reduce angles to ``(-pi, pi]``."""
    return math.pi - np.mod(math.pi - x, 2 * math.pi)


def psi(phi, b: float):
    """Continuous argument of ``g(e^{i phi})`` on ``(-pi, pi)``."""
    return np.arctan2(np.sin(phi), np.cos(phi) + b) - np.arctan2(b * np.sin(phi), b * np.cos(phi) + 1)


def psi_prime(phi, b: float):
    return (1 - b * b) / (1 + 2 * b * np.cos(phi) + b * b)


def lifted_f(phi, theta: float, b: float, d: int):
    """Lift of the circle map: ``f(e^{i phi}) = e^{i lifted_f(phi)}``."""
    return theta + d * psi(phi, b)


# -- critical parameters ---------------------------------------------------------

@dataclass(frozen=True)
class CriticalData:
    d: int
    b: float
    b_c: float
    theta_b: float
    parabolic_R: complex
    parabolic_xi: complex
    alpha_b: float | None
    parabolic_residual: float  # max of ||R| - 1| and |f(R) - R|
    derivative_residual: float  # |f'(R) - (+1 or -1)|
    alpha_residual: float | None

    @property
    def bound(self) -> float:
        """The angle bounding the zero-free region: theta_b or alpha_b."""
        return self.theta_b if self.b < 1 else self.alpha_b


def check_range(d: int, b: float) -> None:
    bc = critical_b(d)
    if not (bc < b < 1 or 1 < b < 1 / bc):
        raise DomainError(f"b = {b} outside ({bc:.6g}, 1) and (1, {1 / bc:.6g}) for d = {d}")


def _parabolic_c(d: int, b: float) -> tuple[float, float, float]:
    """c of ``R^2 + cR + 1 = 0`` together with ``2 + c`` and ``2 - c``
    written without cancellation."""
    if b < 1:
        c = (d * (b * b - 1) + 1 + b * b) / b
        plus = (1 + b) * ((1 + b) - d * (1 - b)) / b
        minus = (1 - b) * (d * (1 + b) - (1 - b)) / b
    else:
        c = (d * (1 - b * b) + 1 + b * b) / b
        plus = (1 + b) * ((1 + b) - d * (b - 1)) / b
        minus = (b - 1) * (d * (b + 1) - (b - 1)) / b
    return c, plus, minus


def solve_parabolic(d: int, b: float) -> CriticalData:
    """Parabolic fixed point on the circle, its parameter xi and theta_b.
    For ``b > 1`` alpha_b is filled in as well."""
    return _critical(int(d), float(b))


@lru_cache(maxsize=4096)
def _critical(d: int, b: float) -> CriticalData:
    check_range(d, b)
    c, plus, minus = _parabolic_c(d, b)
    disc = plus * minus
    if disc < 0:
        raise ArithmeticError(f"|c| = {abs(c)} > 2: no roots on the unit circle")
    R = complex(-c / 2, math.sqrt(disc) / 2)
    if abs(abs(R) - 1) > 1e-8:
        raise ArithmeticError(f"parabolic root has modulus {abs(R)}")
    R /= abs(R)
    g = mobius_g(R, b)
    xi = R / g ** d
    xi /= abs(xi)
    p = DynamicsParams(xi, b, d)
    res = max(abs(abs(R) - 1), abs(apply_f(R, p) - R))
    dres = abs(f_derivative(R, p) - (1 if b < 1 else -1))
    alpha = ares = None
    if b > 1:
        alpha = solve_alpha(d, b)
        ares = alpha_residual(alpha, d, b)
    return CriticalData(d, b, critical_b(d), abs(cmath.phase(xi)), R, xi, alpha, res, dres, ares)


def alpha_residual(alpha: float, d: int, b: float) -> float:
    z = cmath.exp(1j * alpha)
    return abs(z * mobius_g(z, b) ** d - 1)


def solve_alpha(d: int, b: float, grid: int = 4096) -> float:
    """Smallest alpha in (0, pi) with ``e^{i alpha} g(e^{i alpha})^d = 1``."""
    check_range(d, b)
    if b < 1:
        raise DomainError(f"alpha_b is defined for b > 1, got b = {b}")
    h = lambda a: a + d * float(psi(a, b))
    # as b -> 1+ the root crowds towards pi, hence the geometric tail
    tail = math.pi - np.logspace(math.log10(math.pi / grid), -15, 200)[1:]
    a = np.concatenate([np.linspace(0, math.pi, grid + 1)[1:-1], tail])
    q = np.floor((a + d * psi(a, b)) / (2 * math.pi))
    jumps = np.nonzero(np.diff(q))[0]
    if len(jumps) == 0:
        raise DomainError(f"no solution of the alpha equation in (0, pi) for d = {d}, b = {b}")
    j = jumps[0]
    k = max(q[j], q[j + 1])
    target = 2 * math.pi * k
    return brentq(lambda x: h(x) - target, a[j], a[j + 1], xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)


# -- fixed points and invariant arcs -------------------------------------------

class FixedPoint(NamedTuple):
    point: complex
    angle: float
    multiplier: complex
    parabolic: bool
    residual: float


def attracting_fixed_point(p: DynamicsParams, parabolic_tol: float = 1e-6) -> FixedPoint:
    """The fixed point of f on the circle that attracts nearby points.

    For ``b < 1`` it lies in the arc where the lifted map contracts,
    ``|phi| < phi*`` with ``|f'(e^{i phi*})| = 1``; it exists iff
    ``|arg xi| <= theta_b``. For ``b > 1`` the lifted map is decreasing, and
    the fixed point on the branch through ``R = 1`` is returned when it is
    attracting.
    """
    p.require_unit()
    b, d, th = p.b, p.d, p.theta
    G = lambda x: th + d * float(psi(x, b)) - x
    if b < 1:
        if b <= critical_b(d):
            raise NoAttractingPointError(f"b = {b} <= b_c: |f'(1)| >= 1")
        cos_star = (d * (1 - b * b) - 1 - b * b) / (2 * b)
        lo, hi = (-math.pi, math.pi) if cos_star <= -1 else (-math.acos(cos_star), math.acos(cos_star))
    else:
        eps = 1e-12
        lo, hi = -math.pi + eps, math.pi - eps
    glo, ghi = G(lo), G(hi)
    if abs(glo) <= 1e-13:
        phi = lo
    elif abs(ghi) <= 1e-13:
        phi = hi
    elif glo > 0 > ghi:
        phi = brentq(G, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    else:
        raise NoAttractingPointError(f"no attracting fixed point for arg xi = {th}, b = {b}, d = {d}")
    R = cmath.exp(1j * phi)
    mult = f_derivative(R, p)
    parabolic = abs(abs(mult) - 1) <= parabolic_tol
    if abs(mult) > 1 and not parabolic:
        raise NoAttractingPointError(f"fixed point at angle {phi} has |f'| = {abs(mult)} > 1")
    return FixedPoint(R, phi, mult, parabolic, abs(apply_f(R, p) - R))


@dataclass(frozen=True)
class CircularInterval:
    """Closed arc of the unit circle from angle ``start`` sweeping by the
    signed angle ``span`` (``|span| < 2 pi``). ``span = 0`` is one point."""

    start: float
    span: float

    @classmethod
    def between(cls, z1: complex, z2: complex) -> "CircularInterval":
        """Shortest arc from ``z1`` to ``z2``."""
        a = cmath.phase(z1)
        return cls(a, float(wrap(cmath.phase(z2) - a)))

    @property
    def endpoints(self) -> tuple[complex, complex]:
        return cmath.exp(1j * self.start), cmath.exp(1j * (self.start + self.span))

    @property
    def lo(self) -> float:
        return min(self.start, self.start + self.span)

    @property
    def hi(self) -> float:
        return max(self.start, self.start + self.span)

    @property
    def length(self) -> float:
        return abs(self.span)

    def contains_angle(self, phi, slack: float = 0.0):
        """Vectorized membership of angles, with ``slack`` radians of grace."""
        t = np.mod(np.asarray(phi, dtype=float) - self.lo + slack, 2 * math.pi) - slack
        return t <= self.length + slack

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        if is_inf(z) or z == 0:
            return False
        return bool(self.contains_angle(cmath.phase(z), slack))

    def angles(self, n: int) -> np.ndarray:
        return np.linspace(self.start, self.start + self.span, n)


def invariant_interval(p: DynamicsParams, samples: int = 1000, slack: float = 1e-12) -> CircularInterval:
    """The forward-invariant arc I_b: from 1 to the attracting fixed point
    when ``b < 1``, from 1 to xi when ``b > 1``. Invariance is checked on
    ``samples`` points."""
    p.require_unit()
    crit = solve_parabolic(p.d, p.b)
    th = p.theta
    if p.b < 1:
        if abs(th) >= crit.theta_b:
            raise DomainError(f"|arg xi| = {abs(th)} is not below theta_b = {crit.theta_b}")
        arc = CircularInterval(0.0, attracting_fixed_point(p).angle)
    else:
        if abs(th) >= crit.alpha_b:
            raise DomainError(f"|arg xi| = {abs(th)} is not below alpha_b = {crit.alpha_b}")
        arc = CircularInterval(0.0, th)
    phis = arc.angles(samples)
    images = wrap(lifted_f(phis, th, p.b, p.d))
    inside = arc.contains_angle(images, slack)
    if not np.all(inside):
        bad = phis[np.argmin(inside)]
        raise InvarianceError(f"f maps angle {bad} outside the arc {arc}")
    return arc


class Orbit(NamedTuple):
    points: list[complex]
    hit_index: int | None  # first index within HIT_TOL of -1 on the sphere


def orbit(start: complex, p: DynamicsParams, n: int) -> Orbit:
    if n < 0:
        raise ValueError(f"number of steps must be >= 0, got {n}")
    pts = [complex(start) if not is_inf(start) else INF]
    for _ in range(n):
        pts.append(apply_f(pts[-1], p))
    hit = next((i for i, z in enumerate(pts) if chordal_distance(z, -1) < HIT_TOL), None)
    return Orbit(pts, hit)


# -- parameters whose orbit lands on -1 ----------------------------------------------

class ZeroParam(NamedTuple):
    xi: complex
    theta: float
    n: int
    residual: float  # |f^n(xi) + 1|


def _iterate_angles(thetas: np.ndarray, n: int, b: float, d: int):
    """Angles of ``R_n = f^n(xi)`` and their derivatives in theta."""
    phi = np.array(thetas, dtype=float)
    om = np.ones_like(phi)
    for _ in range(n):
        phi, om = wrap(thetas + d * psi(phi, b)), 1 + d * psi_prime(phi, b) * om
    return wrap(phi), om


def _complex_iterate(theta: float, n: int, b: float, d: int) -> complex:
    p = DynamicsParams.on_circle(theta, b, d)
    R = p.xi
    for _ in range(n):
        R = apply_f(R, p)
    return R


def find_zero_param_in_arc(arc: CircularInterval, b: float, d: int, n_max: int = 200,
                           initial_samples: int = 64, max_samples: int = 1 << 20) -> ZeroParam | None:
    """Search the arc of parameters ``xi = e^{i theta}`` for one whose orbit
    ``xi, f(xi), ...`` reaches -1 within ``n_max`` steps.

    For each n the angle of ``R_n`` is tracked along a grid of the arc, and
    the grid is refined until neighbouring samples differ by less than
    pi/2. A crossing of the angle pi between neighbours is then located by
    root finding and confirmed by the residual ``|R_n + 1|``.
    """
    if arc.length == 0:
        raise ValueError("the parameter arc must be nondegenerate")
    DynamicsParams(1, b, d)
    lo, hi = arc.lo, arc.hi
    grid = np.linspace(lo, hi, initial_samples + 1)
    phi, om = _iterate_angles(grid, 0, b, d)
    n = 0
    while n <= n_max:
        h = grid[1] - grid[0]
        step = wrap(np.diff(phi))
        speed = np.maximum(np.abs(om[:-1]), np.abs(om[1:])) * h
        if np.max(np.abs(step)) >= math.pi / 2 or np.max(speed) >= math.pi / 2:
            if len(grid) - 1 >= max_samples:
                raise RuntimeError(f"arc discretization exceeded {max_samples} samples at n = {n}")
            mids = (grid[:-1] + grid[1:]) / 2
            pm, om_m = _iterate_angles(mids, n, b, d)
            grid = _interleave(grid, mids)
            phi = _interleave(phi, pm)
            om = _interleave(om, om_m)
            continue
        found = _crossing(grid, phi, step, n, b, d)
        if found is not None:
            return found
        phi, om = wrap(grid + d * psi(phi, b)), 1 + d * psi_prime(phi, b) * om
        n += 1
    return None


def _interleave(a: np.ndarray, mids: np.ndarray) -> np.ndarray:
    out = np.empty(len(a) + len(mids))
    out[0::2] = a
    out[1::2] = mids
    return out


def _crossing(grid, phi, step, n, b, d) -> ZeroParam | None:
    end = phi[:-1] + step
    exact = np.nonzero(phi == math.pi)[0]
    cells = np.nonzero((end > math.pi) | (end <= -math.pi))[0]
    candidates = sorted(set(exact.tolist()) | set(cells.tolist()))
    u = lambda t: float(wrap(_iterate_angles(np.array([t]), n, b, d)[0][0] - math.pi))
    for j in candidates:
        if phi[j] == math.pi:
            t = grid[j]
        else:
            a, c = grid[j], grid[j + 1]
            ua, uc = u(a), u(c)
            if ua == 0:
                t = a
            elif uc == 0:
                t = c
            elif ua * uc > 0:
                continue
            else:
                t = brentq(u, a, c, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
        res = abs(_complex_iterate(t, n, b, d) + 1)
        if res < ZERO_PARAM_TOL:
            return ZeroParam(cmath.exp(1j * t), float(t), n, res)
    return None


# -- sweeps ----------------------------------------------------------------------

CURVE_COLUMNS = ("b", "theta_b", "alpha_b", "parabolic_residual", "derivative_residual", "alpha_residual")


def curve_rows(d: int, bs: Sequence[float]) -> list[dict]:
    """One row per b; quantities undefined at that b are ``None``."""
    rows = []
    for b in bs:
        row = dict.fromkeys(CURVE_COLUMNS)
        row["b"] = float(b)
        try:
            c = solve_parabolic(d, float(b))
        except DomainError:
            rows.append(row)
            continue
        row.update(theta_b=c.theta_b, alpha_b=c.alpha_b, parabolic_residual=c.parabolic_residual,
                   derivative_residual=c.derivative_residual, alpha_residual=c.alpha_residual)
        rows.append(row)
    return rows
