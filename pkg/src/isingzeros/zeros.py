"""Zeros of Z_G(., b): Aberth iteration, Lee-Yang checks and atlases.

Roots are found by Aberth's simultaneous iteration, which only needs the
Newton correction ``p/p'`` at the current estimates. For general graphs
this comes from the coefficients (evaluated in reversed form outside the
unit disk). For forests it comes from the subtree recursion, which stays
accurate for trees far too large for the coefficient form: the Cayley tree
``T_{8,2}`` has coefficients near ``1e88`` and the coefficient form loses
every root near -1.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .dynamics import critical_b, solve_parabolic
from .graph import Graph, connected_components
from .partition import DEFAULT_CAP, XiPolynomial, _rooted, xi_polynomial

MAX_SWEEPS = 500
RESIDUAL_TOL = 1e-10
CLUSTER_RADIUS = 1e-2

# evaluator(z) -> (p(z), p'(z), scale(z)); the residual of a root is |p|/scale
Evaluator = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


class RootFindingError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray  # with multiplicity
    residuals: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.roots)

    def __len__(self) -> int:
        return len(self.roots)

    @staticmethod
    def concat(sets: Sequence["RootSet"]) -> "RootSet":
        if not sets:
            return RootSet(np.zeros(0, complex), np.zeros(0))
        return RootSet(np.concatenate([s.roots for s in sets]), np.concatenate([s.residuals for s in sets]))


# -- evaluators -------------------------------------------------------------------

def coefficient_evaluator(coeffs: Sequence[float]) -> Evaluator:
    """Horner evaluation; for ``|z| > 1`` the reversed polynomial is used and
    ``p``, ``p'`` are reported divided by ``z**n`` (which leaves ``p/p'``
    and the residual ratio unchanged)."""
    a = np.asarray(coeffs, dtype=complex)
    n = len(a) - 1
    desc, ddesc = a[::-1], np.polyder(a[::-1])
    rev, drev = a, np.polyder(a)
    absdesc, absrev = np.abs(desc), np.abs(rev)

    def ev(z):
        z = np.asarray(z, dtype=complex)
        p = np.empty_like(z)
        dp = np.empty_like(z)
        sc = np.empty(z.shape)
        inner = np.abs(z) <= 1
        zi = z[inner]
        p[inner] = np.polyval(desc, zi)
        dp[inner] = np.polyval(ddesc, zi) if n > 0 else 0
        sc[inner] = np.polyval(absdesc, np.abs(zi))
        zo = z[~inner]
        y = 1 / zo
        q = np.polyval(rev, y)
        dq = np.polyval(drev, y) if n > 0 else 0
        # p(z) = z^n q(y); p'(z) = z^(n-1) (n q(y) - y q'(y))
        p[~inner] = q
        dp[~inner] = y * (n * q - y * dq)
        sc[~inner] = np.polyval(absrev, np.abs(y))
        return p, dp, sc

    return ev


def tree_evaluator(T: Graph, b: float, root: int = 0) -> Evaluator:
    """Evaluate ``Z_T`` and its derivative through the subtree recursion.

    Subtrees are grouped by isomorphism class, so symmetric trees such as
    Cayley trees cost one evaluation per level. The scale is the sum of the
    moduli of the two root terms (root in U, root not in U).
    """
    order, children = _rooted(T, root)
    shape: dict[int, int] = {}
    classes: dict[tuple, int] = {}
    recipe: list[list[tuple[int, int]]] = []  # per class: (child class, multiplicity)
    for u in reversed(order):
        key = tuple(sorted(shape[c] for c in children[u]))
        if key not in classes:
            classes[key] = len(recipe)
            counts: dict[int, int] = {}
            for c in key:
                counts[c] = counts.get(c, 0) + 1
            recipe.append(sorted(counts.items()))
        shape[u] = classes[key]
    top = shape[root]

    def ev(z):
        z = np.asarray(z, dtype=complex)
        vals = []
        for parts in recipe:
            P, dP = z.copy(), np.ones_like(z)
            Q, dQ = np.ones_like(z), np.zeros_like(z)
            for c, m in parts:
                p, q, dp, dq = vals[c]
                A, dA = p + b * q, dp + b * dq
                B, dB = b * p + q, b * dp + dq
                Am1, Bm1 = A ** (m - 1), B ** (m - 1)
                P, dP = P * Am1 * A, dP * Am1 * A + P * m * Am1 * dA
                Q, dQ = Q * Bm1 * B, dQ * Bm1 * B + Q * m * Bm1 * dB
            s = np.maximum(np.abs(P), np.abs(Q))
            s[s == 0] = 1
            vals.append((P / s, Q / s, dP / s, dQ / s))
        p, q, dp, dq = vals[top]
        return p + q, dp + dq, np.abs(p) + np.abs(q)

    return ev


# -- Aberth iteration -------------------------------------------------------------

def aberth(ev: Evaluator, degree: int, radius: float = 1.0, max_sweeps: int = MAX_SWEEPS,
           tol: float = 1e-15) -> tuple[np.ndarray, int]:
    """Simultaneous iteration from a perturbed circle of the given radius.
    Roots whose step falls below ``tol * max(1, |z|)`` are frozen. Returns
    the estimates and the number of sweeps used."""
    k = np.arange(degree)
    z = radius * np.exp(1j * (2 * np.pi * k / degree + 0.4)) * (1 + 0.01 * np.cos(3.7 * k + 1))
    active = np.ones(degree, dtype=bool)
    for sweep in range(1, max_sweeps + 1):
        idx = np.nonzero(active)[0]
        za = z[idx]
        p, dp, _ = ev(za)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = p / dp
            diff = za[:, None] - z[None, :]
            diff[np.arange(len(idx)), idx] = np.inf
            step = w / (1 - w * (1 / diff).sum(axis=1))
        step[p == 0] = 0
        bad = ~np.isfinite(step)
        step[bad] = 1e-3 * (1 + np.abs(za[bad]))  # kick off a critical point
        z[idx] = za - step
        done = np.abs(step) <= tol * np.maximum(1, np.abs(za))
        active[idx[done]] = False
        if not active.any():
            return z, sweep
    return z, max_sweeps


def _newton(ev: Evaluator, z: np.ndarray, steps: int) -> np.ndarray:
    for _ in range(steps):
        p, dp, _ = ev(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            nz = z - p / dp
        ok = np.isfinite(nz)
        # keep a Newton step only when it does not increase the residual
        pn, _, sn = ev(np.where(ok, nz, z))
        _, _, s = ev(z)
        better = ok & (np.abs(pn) / sn <= np.abs(p) / s)
        z = np.where(better, nz, z)
    return z


def _merge_clusters(coeffs: np.ndarray, z: np.ndarray, ev: Evaluator) -> np.ndarray:
    """Replace tight groups of estimates by a multiple root when the data
    support it. A group of m estimates is moved to the root of the
    (m-1)-th derivative near its centroid; the move is kept only if the
    residual there is no worse than at the original estimates."""
    n = len(z)
    z = z.copy()
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    d = np.abs(z[:, None] - z[None, :])
    for i, j in zip(*np.nonzero(np.triu(d < CLUSTER_RADIUS, 1))):
        parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    poly = np.polynomial.Polynomial(coeffs)
    for members in groups.values():
        m = len(members)
        if m < 2:
            continue
        c = z[members].mean()
        der = poly.deriv(m - 1)
        dder = der.deriv()
        for _ in range(50):
            dv = dder(c)
            if dv == 0:
                break
            nc = c - der(c) / dv
            if abs(nc - c) <= 1e-16 * max(1, abs(c)):
                c = nc
                break
            c = nc
        p_new, _, s_new = ev(np.array([c]))
        p_old, _, s_old = ev(z[members])
        if abs(p_new[0]) / s_new[0] <= max(np.max(np.abs(p_old) / s_old), 1e-15):
            z[members] = c
    return z


def _roots(ev: Evaluator, degree: int, radius: float, coeffs: np.ndarray | None) -> RootSet:
    if degree == 0:
        return RootSet(np.zeros(0, complex), np.zeros(0))
    z, sweeps = aberth(ev, degree, radius)
    z = _newton(ev, z, 3)
    if coeffs is not None:
        z = _merge_clusters(coeffs, z, ev)
    p, _, s = ev(z)
    res = np.abs(p) / s
    worst = float(np.max(res))
    if not worst < RESIDUAL_TOL:
        raise RootFindingError(f"root finding did not converge after {sweeps} sweeps; worst residual {worst:.3g}")
    order = np.lexsort((z.imag, z.real))
    return RootSet(z[order], res[order])


def polynomial_roots(P: XiPolynomial | Sequence[float]) -> RootSet:
    """All roots of a polynomial given by ascending coefficients.

    Residuals are ``|P(z)| / sum_k |a_k| |z|^k``, which is at most
    ``|P(z)| / max_k |a_k|`` on the unit circle.
    """
    a = np.asarray(P.coeffs if isinstance(P, XiPolynomial) else P, dtype=float)
    nz = np.nonzero(a)[0]
    if len(nz) == 0:
        raise ValueError("the zero polynomial has no finite root set")
    low, high = nz[0], nz[-1]
    a = a[low:high + 1]
    n = len(a) - 1
    radius = (abs(a[0]) / abs(a[-1])) ** (1 / n) if n else 1.0
    rs = _roots(coefficient_evaluator(a), n, radius, a)
    if low:  # factor xi^low
        rs = RootSet(np.concatenate([np.zeros(low, complex), rs.roots]),
                     np.concatenate([np.zeros(low), rs.residuals]))
    return rs


def tree_roots(T: Graph, b: float) -> RootSet:
    """Roots of ``Z_T(., b)`` for a tree of any size."""
    if not T.is_tree():
        raise ValueError("tree_roots needs a connected acyclic graph")
    return _roots(tree_evaluator(T, b), T.n, 1.0, None)


def graph_roots(G: Graph, b: float, cap: int = DEFAULT_CAP) -> RootSet:
    """Roots of ``Z_G(., b)`` collected over connected components; equal
    components are solved once. Trees use the subtree recursion, other
    components their coefficients (at most ``cap`` vertices)."""
    cache: dict[tuple, RootSet] = {}
    parts = []
    for comp in connected_components(G):
        H = comp.graph
        key = (H.n, H.edges)
        if key not in cache:
            if H.n == 1:
                cache[key] = RootSet(np.array([-1 + 0j]), np.zeros(1))
            elif H.is_tree():
                cache[key] = tree_roots(H, b)
            else:
                cache[key] = polynomial_roots(xi_polynomial(H, b, cap))
        parts.append(cache[key])
    return RootSet.concat(parts)


def lee_yang_deviation(rs: RootSet) -> float:
    if len(rs.roots) == 0:
        return 0.0
    return float(np.max(np.abs(np.abs(rs.roots) - 1)))


# -- atlases ------------------------------------------------------------------

class AtlasEntry(NamedTuple):
    graph_id: str
    roots: RootSet


@dataclass
class Atlas:
    b: float
    bin_edges: np.ndarray
    counts: np.ndarray
    entries: list[AtlasEntry]
    theta_b: float | None
    flagged: list[tuple[str, complex]]  # roots with |arg| < theta_b - 1e-6

    @property
    def bin_centers(self) -> np.ndarray:
        return (self.bin_edges[:-1] + self.bin_edges[1:]) / 2

    def roots_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["graph_id", "re", "im", "modulus", "arg"])
        for e in self.entries:
            for z in e.roots.roots:
                w.writerow([e.graph_id, repr(float(z.real)), repr(float(z.imag)), repr(float(abs(z))),
                            repr(float(np.angle(z)))])
        return out.getvalue()

    def histogram_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["bin_center", "count"])
        for c, k in zip(self.bin_centers, self.counts):
            w.writerow([repr(float(c)), int(k)])
        return out.getvalue()


def atlas_arguments(roots: np.ndarray) -> np.ndarray:
    """Arguments in ``(-pi, pi]`` for the histogram."""
    return np.where(np.angle(roots) == -np.pi, np.pi, np.angle(roots))


def zero_atlas(family: Iterable[Graph | tuple[str, Graph]], b: float, bins: int = 64, d: int | None = None,
               cap: int = DEFAULT_CAP, workers: int = 1) -> Atlas:
    """Histogram of root arguments over a family of graphs.

    When ``b`` lies in ``(b_c, 1)`` for ``d`` (default: the largest
    ``max_degree - 1`` in the family, at least 2), roots with
    ``|arg| < theta_b - 1e-6`` are flagged. ``workers > 1`` finds the roots
    of different graphs in parallel processes; the result does not depend
    on it.
    """
    items = [item if isinstance(item, tuple) else (str(i), item) for i, item in enumerate(family)]
    job = functools.partial(graph_roots, b=b, cap=cap)
    graphs = [G for _, G in items]
    if workers > 1 and len(graphs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            found = list(pool.map(job, graphs))
    else:
        found = [job(G) for G in graphs]
    entries = [AtlasEntry(gid, rs) for (gid, _), rs in zip(items, found)]
    edges = np.linspace(-math.pi, math.pi, bins + 1)
    args = np.concatenate([atlas_arguments(e.roots.roots) for e in entries]) if entries else np.zeros(0)
    # bins are closed on the right so that pi falls in the last one
    idx = np.clip(np.searchsorted(edges, args, side="left") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    if d is None:
        d = max([2] + [G.max_degree - 1 for _, G in items])
    theta = None
    flagged: list[tuple[str, complex]] = []
    if critical_b(d) < b < 1:
        theta = solve_parabolic(d, b).theta_b
        for e in entries:
            for z in e.roots.roots:
                if abs(np.angle(z)) < theta - 1e-6:
                    flagged.append((e.graph_id, complex(z)))
    return Atlas(float(b), edges, counts, entries, theta, flagged)
