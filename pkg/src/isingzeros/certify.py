"""Zero-freeness certificates.

For ``b`` in ``(b_c, 1)`` with ``|arg xi| < theta_b``, or ``b`` in
``(1, 1/b_c)`` with ``|arg xi| < alpha_b``, every ratio of a SAW tree at a
vertex with at most ``d`` children lies in the cone over the invariant arc
``I_b``. At a root with ``d + 1`` children the product stays off the
negative real axis. A root ratio different from -1 then gives
``Z_G(r xi, b) != 0``. :func:`certify_nonvanishing` evaluates all of this
on the actual SAW trees and records the outcome.
"""

from __future__ import annotations

import cmath
import enum
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .dynamics import (CircularInterval, DomainError, DynamicsParams, critical_b, invariant_interval,
                       mobius_g, solve_parabolic)
from .graph import EMPTY, Graph, connected_components
from .partition import (DEFAULT_CAP, ZERO_TOL, CapExceededError, IndeterminateRatioError, ModelParams,
                        _z_and_scale)
from .sawtree import DEFAULT_MAX_NODES, saw_fold
from .sphere import INF, chordal_distance, is_inf, to_json

CONE_SLACK = 1e-12
BOUND_GUARD = 1e-10
MINUS_ONE_TOL = 1e-9


@dataclass(frozen=True)
class Cone:
    """Nonnegative multiples of the arc ``I_b``, together with 0 and infinity."""

    arc: CircularInterval

    def margin(self, R: complex) -> float:
        """Angular distance from ``arg R`` to the nearest edge of the cone,
        positive inside and negative outside; ``inf`` at 0 and infinity."""
        if R == 0 or is_inf(R):
            return math.inf
        t = (cmath.phase(R) - self.arc.lo) % (2 * math.pi)
        L = self.arc.length
        if t <= L:
            return min(t, L - t)
        return -min(t - L, 2 * math.pi - t)


def cone_contains(R: complex, C: Cone, slack: float = CONE_SLACK) -> bool:
    return C.margin(R) >= -slack


def make_cone(d: int, b: float, xi: complex) -> Cone:
    return Cone(invariant_interval(DynamicsParams(xi / abs(xi), b, d)))


def multivariate_F(R_list: Sequence[complex], mu: complex, b: float, d: int | None = None) -> complex:
    """``mu * prod g(R_i)`` on the sphere. A product of 0 and infinity has
    no value and raises :class:`IndeterminateRatioError`."""
    if d is not None and len(R_list) != d:
        raise ValueError(f"expected {d} ratios, got {len(R_list)}")
    gs = [mobius_g(R, b) for R in R_list]
    has_inf = any(is_inf(g) for g in gs)
    has_zero = mu == 0 or any(g == 0 for g in gs)
    if has_inf and has_zero:
        raise IndeterminateRatioError("product of 0 and infinity")
    if has_inf:
        return INF
    out = complex(mu)
    for g in gs:
        out *= g
    return out


class Verdict(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    OUT_OF_DOMAIN = "OUT_OF_DOMAIN"


class TraceEntry(NamedTuple):
    walk: tuple[int, ...]  # in original vertex ids
    ratio: complex
    in_cone: bool


@dataclass
class ComponentTrace:
    base: int
    final_ratio: complex | None = None
    min_cone_margin: float = math.inf
    nodes: int = 0
    entries: list[TraceEntry] = field(default_factory=list)
    violation: str | None = None

    def to_json(self) -> dict:
        return {"base": self.base,
                "final_ratio": None if self.final_ratio is None else to_json(self.final_ratio),
                "min_cone_margin": _num(self.min_cone_margin), "nodes": self.nodes}


@dataclass
class Certificate:
    verdict: Verdict
    d: int
    b: float
    xi: complex
    r: float
    bound_kind: str | None = None
    bound_value: float | None = None
    components: list[ComponentTrace] = field(default_factory=list)
    brute_force_abs_Z: float | None = None
    reason: str | None = None

    def to_json(self) -> dict:
        bound = None if self.bound_kind is None else {"kind": self.bound_kind, "value": self.bound_value}
        return {"verdict": self.verdict.value, "d": self.d, "b": self.b, "xi": [self.xi.real, self.xi.imag],
                "r": self.r, "bound_used": bound, "components": [c.to_json() for c in self.components],
                "brute_force_abs_Z": self.brute_force_abs_Z, "reason": self.reason}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _num(x: float):
    return None if math.isinf(x) else x


class _Violation(Exception):
    pass


def _domain_problem(G: Graph, params: ModelParams) -> tuple[str | None, str | None, float | None]:
    """(reason, bound kind, bound value); reason is None when in domain."""
    d, b = params.d, float(params.b)
    if int(d) != d or d < 2:
        return f"d = {d} must be an integer >= 2", None, None
    if G.max_degree > d + 1:
        return f"max degree {G.max_degree} exceeds d + 1 = {d + 1}", None, None
    bc = critical_b(d)
    if not (bc < b < 1 or 1 < b < 1 / bc):
        return f"b = {b} outside ({bc:.6g}, 1) and (1, {1 / bc:.6g})", None, None
    if params.fields:
        return "per-vertex fields are not covered by the certificate", None, None
    xi = complex(params.xi)
    if abs(abs(xi) - 1) > 1e-12:
        return f"|xi| = {abs(xi)} must be 1 (use the scale r for other moduli)", None, None
    crit = solve_parabolic(d, b)
    kind, bound = ("theta", crit.theta_b) if b < 1 else ("alpha", crit.alpha_b)
    if not abs(cmath.phase(xi)) < bound - BOUND_GUARD:
        return f"|arg xi| = {abs(cmath.phase(xi)):.12g} is not below {kind}_b = {bound:.12g}", kind, bound
    return None, kind, bound


def certify_nonvanishing(G: Graph, params: ModelParams, cap: int = DEFAULT_CAP, record_trace: bool = False,
                         max_nodes: int = DEFAULT_MAX_NODES) -> Certificate:
    """Certify ``Z_G(r xi, b) != 0`` where ``r = params.scale``."""
    d, b, xi, r = int(params.d), float(params.b), complex(params.xi), float(params.scale)
    reason, kind, bound = _domain_problem(G, params)
    cert = Certificate(Verdict.OUT_OF_DOMAIN, d, b, xi, r, kind, bound, reason=reason)
    if reason is not None:
        return cert
    try:
        cone = make_cone(d, b, xi)
    except Exception as exc:  # invariance check failure inside the domain is a bug
        cert.verdict, cert.reason = Verdict.FAIL, f"invariant arc: {exc}"
        return cert
    mu = r * xi
    for comp in connected_components(G):
        trace = ComponentTrace(base=comp.vertices[0])
        cert.components.append(trace)
        try:
            _certify_component(comp.graph, comp.vertices, mu, b, d, cone, trace, record_trace, max_nodes)
        except (_Violation, IndeterminateRatioError) as exc:
            trace.violation = str(exc)
            cert.verdict, cert.reason = Verdict.FAIL, f"component at {trace.base}: {exc}"
            return cert
        except CapExceededError as exc:
            cert.verdict, cert.reason = Verdict.FAIL, str(exc)
            return cert
    if G.n <= cap:
        z, scale = _z_and_scale(G, params, EMPTY, cap)
        cert.brute_force_abs_Z = abs(z)
        if abs(z) <= ZERO_TOL * scale:
            cert.verdict, cert.reason = Verdict.FAIL, "brute-force partition function vanishes"
            return cert
    cert.verdict = Verdict.PASS
    return cert


def _certify_component(H: Graph, ids: Sequence[int], mu: complex, b: float, d: int, cone: Cone,
                       trace: ComponentTrace, record: bool, max_nodes: int) -> None:
    def combine(walk, spin, kids):
        trace.nodes += 1
        if spin is not None:
            return INF if spin == 1 else 0j
        if len(walk) == 1 and len(kids) == d + 1:
            R = _times(mobius_g(kids[d], b), multivariate_F(kids[:d], mu, b))
            if not (R == 0 or is_inf(R)) and abs(cmath.phase(R)) >= math.pi:
                raise _Violation(f"root product lies on the negative real axis: {R}")
            inside = True
        else:
            R = multivariate_F(list(kids) + [1] * (d - len(kids)), mu, b)
            m = cone.margin(R)
            trace.min_cone_margin = min(trace.min_cone_margin, m)
            inside = m >= -CONE_SLACK
        if record:
            trace.entries.append(TraceEntry(tuple(ids[u] for u in walk), R, inside))
        if not inside:
            raise _Violation(f"ratio {R} at walk {[ids[u] for u in walk]} leaves the cone")
        return R

    R = saw_fold(H, 0, combine, max_nodes=max_nodes)
    trace.final_ratio = R
    if chordal_distance(R, -1) <= MINUS_ONE_TOL:
        raise _Violation(f"root ratio {R} is -1")


def _times(W: complex, F: complex) -> complex:
    if (is_inf(W) and F == 0) or (W == 0 and is_inf(F)):
        raise IndeterminateRatioError("product of 0 and infinity")
    if is_inf(W) or is_inf(F):
        return INF
    return W * F


class AntiferroDisk(NamedTuple):
    r: float
    mu_max: float


def antiferro_origin_disk(d: int, b: float) -> AntiferroDisk:
    """Radius ``r`` in ``(0, 1/b)`` maximizing ``mu(r) = r ((1 - b r)/(r + b))**d``.

    For ``|mu| <= mu(r)`` the map ``F_{mu,b}`` sends ``(D_r + {inf})**d`` into
    ``D_r``, since ``|g(R)| <= (r + b)/(1 - b r)`` there. Setting the
    derivative of ``log mu`` to zero gives ``b r**2 + B r - b = 0`` with
    ``B = d (b**2 + 1) + b**2 - 1``.
    """
    if not b > 1:
        raise DomainError(f"the origin disk is defined for b > 1, got {b}")
    B = d * (b * b + 1) + b * b - 1
    r = 2 * b / (B + math.sqrt(B * B + 4 * b * b))  # positive root, cancellation-free
    return AntiferroDisk(r, r * ((1 - b * r) / (r + b)) ** d)
