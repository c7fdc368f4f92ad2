"""Exact Ising partition functions, boundary conditions and ratios.

``Z_G(xi, b) = sum over U of prod_{u in U} xi_u * b**|cut(U)|``. Subsets are
enumerated in vectorized chunks; when all free vertices carry the same field
the enumeration only tallies integer counts per (|U|, |cut|), which keeps the
coefficients of the xi-polynomial exactly palindromic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .graph import EMPTY, BoundaryCondition, Graph, GraphError, connected_components
from .sphere import INF, is_inf

DEFAULT_CAP = 24
# |Z| <= ZERO_TOL * (sum of |terms|) counts as a vanishing partition function
ZERO_TOL = 1e-14
_CHUNK = 1 << 18


class CapExceededError(RuntimeError):
    """Too many free vertices for brute-force enumeration."""


class IndeterminateRatioError(ArithmeticError):
    """Numerator and denominator partition functions both vanish."""


@dataclass(frozen=True)
class ModelParams:
    """Edge interaction ``b``, global field ``xi`` and branching ``d``.

    The field at vertex ``v`` is ``scale * fields.get(v, xi)``; ``scale`` is
    the ray parameter r >= 0.
    """

    b: float
    xi: complex = 1.0
    d: int = 2
    scale: float = 1.0
    fields: Mapping[int, complex] | None = None

    def __post_init__(self):
        if isinstance(self.b, complex) or not math.isfinite(float(self.b)):
            raise ValueError(f"b must be a finite real number, got {self.b!r}")
        if self.scale < 0:
            raise ValueError(f"scale must be nonnegative, got {self.scale}")

    @property
    def effective_xi(self) -> complex:
        return self.scale * complex(self.xi)

    def field(self, v: int) -> complex:
        if self.fields and v in self.fields:
            return self.scale * complex(self.fields[v])
        return self.scale * complex(self.xi)


@dataclass(frozen=True)
class PhysicalParams:
    J: float
    h: float
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"temperature must be positive, got {self.T}")


class ModelFromPhysical(NamedTuple):
    xi: float
    b: float
    edge_log_factor: float  # J/T, one per edge
    vertex_log_factor: float  # h/T, one per vertex

    def prefactor(self, G: Graph) -> float:
        return math.exp(self.edge_log_factor * len(G.edges) + self.vertex_log_factor * G.n)


def physical_to_model(p: PhysicalParams) -> ModelFromPhysical:
    """Map (J, h, T) to (xi, b); the spin-sum form equals
    ``prefactor(G) * Z_G(xi, b)``."""
    return ModelFromPhysical(math.exp(-2 * p.h / p.T), math.exp(-2 * p.J / p.T), p.J / p.T, p.h / p.T)


@dataclass(frozen=True)
class XiPolynomial:
    """``Z_G(., b)`` as coefficients ``a_0..a_n`` in ascending powers of xi."""

    b: float
    coeffs: np.ndarray
    cut_counts: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, xi):
        return np.polynomial.polynomial.polyval(xi, self.coeffs)

    def to_json(self) -> dict:
        return {"b": float(self.b), "coeffs": [float(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj) -> "XiPolynomial":
        return cls(float(obj["b"]), np.asarray(obj["coeffs"], dtype=float))


# -- enumeration ---------------------------------------------------------------

class _Setup(NamedTuple):
    free: list[int]
    ff_edges: list[tuple[int, int]]  # free-free edges as positions into `free`
    lin: np.ndarray  # cut change when free position j joins U
    base_cut: int
    fixed_weight: complex
    fixed_abs: float


def _setup(G: Graph, tau: BoundaryCondition, params: ModelParams | None, cap: int,
           skip: frozenset = frozenset()) -> _Setup:
    tau.validate(G)
    free = [v for v in range(G.n) if v not in tau]
    if len(free) > cap:
        raise CapExceededError(f"{len(free)} free vertices exceed the brute-force cap of {cap}")
    pos = {v: j for j, v in enumerate(free)}
    ff, lin = [], np.zeros(len(free), dtype=np.int64)
    base_cut = 0
    for u, v in G.edges:
        if u in pos and v in pos:
            ff.append((pos[u], pos[v]))
        elif u in pos or v in pos:
            j, other = (pos[u], v) if u in pos else (pos[v], u)
            if tau.get(other) == 1:
                base_cut += 1  # j outside U cuts the edge
                lin[j] -= 1
            else:
                lin[j] += 1
        elif tau.get(u) != tau.get(v):
            base_cut += 1
    w, wabs = 1 + 0j, 1.0
    if params is not None:
        for v in tau:
            if tau.get(v) == 1 and v not in skip:
                w *= params.field(v)
                wabs *= abs(params.field(v))
    return _Setup(free, ff, lin, base_cut, w, wabs)


def _chunks(s: _Setup):
    """Yield (bits, |U|, cut) for every subset of the free vertices."""
    m = len(s.free)
    total = 1 << m
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        bits = [(idx >> j) & 1 for j in range(m)]
        k = np.zeros(len(idx), dtype=np.int64)
        cut = np.full(len(idx), s.base_cut, dtype=np.int64)
        for j in range(m):
            k += bits[j]
            if s.lin[j]:
                cut += s.lin[j] * bits[j]
        for a, c in s.ff_edges:
            cut += bits[a] ^ bits[c]
        yield bits, k, cut


def _cut_histogram(s: _Setup, n_edges: int) -> np.ndarray:
    m = len(s.free)
    width = n_edges + 1
    hist = np.zeros((m + 1) * width, dtype=np.int64)
    for _, k, cut in _chunks(s):
        hist += np.bincount(k * width + cut, minlength=len(hist))
    return hist.reshape(m + 1, width)


def _z_and_scale(G: Graph, params: ModelParams, tau: BoundaryCondition, cap: int,
                 skip: frozenset = frozenset()) -> tuple[complex, float]:
    """Z and the sum of |terms|. Fields of fixed vertices in ``skip`` are
    left out of the weights."""
    if not tau.feasible:
        return 0j, 0.0
    s = _setup(G, tau, params, cap, skip)
    b = float(params.b)
    fvals = [params.field(v) for v in s.free]
    if all(f == fvals[0] for f in fvals[1:]):
        x = fvals[0] if fvals else 1.0
        hist = _cut_histogram(s, len(G.edges))
        ks = np.arange(hist.shape[0])
        cs = np.arange(hist.shape[1])
        xk, bc = _powers(x, ks), _powers(b, cs)
        z = complex(xk @ (hist @ bc))
        scale = float(np.abs(xk) @ (hist @ np.abs(bc)))
    else:
        bpow = _powers(b, np.arange(len(G.edges) + 1))
        z, scale = 0j, 0.0
        for bits, _, cut in _chunks(s):
            w = np.ones(len(cut), dtype=complex)
            for j, f in enumerate(fvals):
                w *= np.where(bits[j] == 1, f, 1.0)
            w *= bpow[cut]
            z += complex(w.sum())
            scale += float(np.abs(w).sum())
    return z * s.fixed_weight, scale * s.fixed_abs


def _powers(x, ks: np.ndarray) -> np.ndarray:
    # 0**0 == 1 convention
    return np.power(np.asarray(x, dtype=complex if isinstance(x, complex) else float), ks)


def z_exact(G: Graph, params: ModelParams, tau: BoundaryCondition = EMPTY, cap: int = DEFAULT_CAP) -> complex:
    """Exact (multivariate, boundary-conditioned) partition function."""
    return _z_and_scale(G, params, tau, cap)[0]


def xi_polynomial(G: Graph, b: float, cap: int = DEFAULT_CAP) -> XiPolynomial:
    if G.n > cap:
        raise CapExceededError(f"{G.n} vertices exceed the brute-force cap of {cap}")
    hist = _cut_histogram(_setup(G, EMPTY, None, cap), len(G.edges))
    coeffs = hist @ _powers(float(b), np.arange(hist.shape[1]))
    return XiPolynomial(float(b), coeffs, hist)


def tree_xi_polynomial(G: Graph, b: float) -> XiPolynomial:
    """xi-polynomial of a forest of any size via the root recursion on
    polynomial pairs (Z with root in U, Z with root outside U)."""
    total = np.array([1.0])
    for comp in connected_components(G):
        T = comp.graph
        if len(T.edges) != T.n - 1:
            raise GraphError("tree_xi_polynomial needs an acyclic graph")
        order, children = _rooted(T, 0)
        z1: list = [None] * T.n
        z0: list = [None] * T.n
        for u in reversed(order):
            p, q = np.array([0.0, 1.0]), np.array([1.0])
            for c in children[u]:
                p = np.convolve(p, _padd(z1[c], b * z0[c]))
                q = np.convolve(q, _padd(b * z1[c], z0[c]))
                z1[c] = z0[c] = None
            z1[u], z0[u] = p, q
        total = np.convolve(total, _padd(z1[0], z0[0]))
    return XiPolynomial(float(b), total)


def _padd(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    out = np.zeros(max(len(a), len(c)))
    out[: len(a)] += a
    out[: len(c)] += c
    return out


# -- ratios ------------------------------------------------------------------

def ratio_direct(G: Graph, tau: BoundaryCondition, v: int, params: ModelParams, cap: int = DEFAULT_CAP) -> complex:
    """``Z_{tau, v=1} / Z_{tau, v=0}`` by enumeration; ``INF`` when the
    denominator vanishes.

    The fields at vertices fixed by ``tau`` cancel from the ratio and are
    ignored, so they may be 0.
    """
    if not 0 <= v < G.n:
        raise GraphError(f"vertex {v} outside 0..{G.n - 1}")
    skip = frozenset(tau)
    z1, s1 = _z_and_scale(G, params, tau.fix(v, 1), cap, skip)
    z0, s0 = _z_and_scale(G, params, tau.fix(v, 0), cap, skip)
    zero1 = abs(z1) <= ZERO_TOL * s1
    zero0 = abs(z0) <= ZERO_TOL * s0
    if zero0 and zero1:
        raise IndeterminateRatioError(f"both partition functions vanish at vertex {v}")
    if zero0:
        return INF
    return z1 / z0


def _rooted(T: Graph, root: int) -> tuple[list[int], list[list[int]]]:
    order, children = [root], [[] for _ in range(T.n)]
    seen = [False] * T.n
    seen[root] = True
    i = 0
    while i < len(order):
        u = order[i]
        i += 1
        for w in T.adjacency[u]:
            if not seen[w]:
                seen[w] = True
                children[u].append(w)
                order.append(w)
    return order, children


def merge_pairs(field_u: complex, spin, child_pairs: Sequence[tuple[complex, complex]], b: float, where=None):
    """One step of the root recursion on projective pairs.

    ``child_pairs`` are ``(Z with child in U, Z with child not in U)`` up to a
    common factor each. Returns the normalized pair for the parent; a
    near-vanishing second entry is snapped to 0 so the ratio is exactly
    ``INF``. ``spin`` is the boundary value at the parent or ``None``; the
    field of a fixed vertex cancels and is ignored.
    """
    if spin is not None:
        field_u = 1
    p, q = complex(field_u), 1 + 0j
    sp, sq = abs(field_u), 1.0
    ab = abs(b)
    for cp, cq in child_pairs:
        p *= cp + b * cq
        q *= b * cp + cq
        sp *= abs(cp) + ab * abs(cq)
        sq *= ab * abs(cp) + abs(cq)
    if spin == 1:
        q, sq = 0j, 0.0
    elif spin == 0:
        p, sp = 0j, 0.0
    zero_p = abs(p) <= ZERO_TOL * sp
    zero_q = abs(q) <= ZERO_TOL * sq
    if zero_p and zero_q:
        raise IndeterminateRatioError(
            "both partition functions vanish" + (f" at subtree rooted at {where}" if where is not None else ""))
    if zero_q:
        return 1 + 0j, 0j
    m = max(abs(p), abs(q))
    return p / m, q / m


def pair_to_ratio(pair: tuple[complex, complex]) -> complex:
    p, q = pair
    return INF if q == 0 else p / q


def ratio_to_pair(r: complex) -> tuple[complex, complex]:
    if is_inf(r):
        return 1 + 0j, 0j
    if abs(r) > 1:
        return 1 + 0j, 1 / r
    return complex(r), 1 + 0j


def ratio_tree(T: Graph, tau: BoundaryCondition, v: int, params: ModelParams) -> complex:
    """Root ratio of a tree by the child recursion, linear in ``|V(T)|``."""
    if not 0 <= v < T.n:
        raise GraphError(f"vertex {v} outside 0..{T.n - 1}")
    if not T.is_tree():
        raise GraphError("ratio_tree needs a connected acyclic graph")
    tau.validate(T)
    if not tau.feasible:
        raise IndeterminateRatioError("infeasible boundary condition")
    order, children = _rooted(T, v)
    b = float(params.b)
    pairs: dict[int, tuple[complex, complex]] = {}
    for u in reversed(order):
        kids = [pairs.pop(c) for c in children[u]]
        pairs[u] = merge_pairs(params.field(u), tau.get(u), kids, b, where=u)
    return pair_to_ratio(pairs[v])
