"""Approximating log Z by a truncated Taylor series.

The plain series of ``log Z_G`` in xi has radius of convergence equal to
the smallest modulus of a zero, which is 1 for ``b < 1`` (all zeros lie on
the unit circle). It therefore cannot be truncated at ``|xi| = 1``. As in
Barvinok's method we first compose with a map of the unit disk into a
zero-free region and truncate the series of the composition.

With ``s = xi/(1 + xi)`` we have ``Z_G(xi) = (1 + xi)**n Q(s)`` where
``Q(s) = sum_k a_k s**k (1 - s)**(n - k)``. The zeros of Z on the unit
circle with ``|arg| >= theta_b`` become the two rays
``Re s = 1/2, |Im s| >= tau/2`` with ``tau = tan(theta_b/2)``, so Q has no
zero off these rays. The map

    psi(z) = 1/2 + i tau A(z) / (1 + A(z)**2),   A(z) = (z + c)/(1 + conj(c) z),

with ``c = i sigma`` and ``sigma = sqrt(tau**2 + 1) - tau`` takes the unit
disk onto the plane minus these rays and sends 0 to 0. Clearing
denominators, ``Q(psi(z)) = V(z) / Y(z)**n`` for the polynomials
``Y = (1 + conj(c) z)**2 + (z + c)**2`` and ``V = sum_k a_k C+**k C-**(n-k)``,
``C± = Y/2 ± i tau (z + c)(1 + conj(c) z)``. All their zeros lie on the unit
circle, so the coefficients of ``log V - n log Y`` follow from the log
recursion applied to two short polynomials. The recursion is run in
extended precision because ``V(0)`` is tiny next to the other coefficients
of ``V``.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from .certify import Verdict, certify_nonvanishing
from .dynamics import solve_parabolic
from .graph import Graph
from .partition import DEFAULT_CAP, ModelParams, XiPolynomial, xi_polynomial, z_exact
from .sphere import to_json

FULL_TOL = 1e-14
MAX_ORDER = 4000


@dataclass(frozen=True)
class TaylorTruncation:
    """Coefficients ``l_0..l_m`` of a logarithm's power series."""

    m: int
    l_coeffs: np.ndarray  # l_0 .. l_m
    epsilon_target: float | None = None

    def evaluate(self, z: complex, m: int | None = None) -> complex:
        m = self.m if m is None else m
        return complex(np.polynomial.polynomial.polyval(z, self.l_coeffs[: m + 1]))


def log_z_coefficients(P: XiPolynomial | Sequence, m: int, dps: int | None = None) -> TaylorTruncation:
    """Coefficients of ``log P(z)`` up to ``z**m`` from
    ``k a_k = sum_{j=1..k} j l_j a_{k-j}`` (with ``a_k = 0`` past the
    degree). ``dps`` switches to mpmath with that many digits."""
    a = list(P.coeffs if isinstance(P, XiPolynomial) else P)
    if m < 0:
        raise ValueError(f"order must be >= 0, got {m}")
    if a[0] == 0:
        raise ValueError("the constant coefficient must be nonzero")
    if dps is None:
        q = np.zeros(m + 1, dtype=complex)
        k_hi = min(m, len(a) - 1)
        q[: k_hi + 1] = np.asarray(a[: k_hi + 1], dtype=complex) / a[0]
        l = np.zeros(m + 1, dtype=complex)
        l[0] = cmath.log(complex(a[0]))
        jl = np.zeros(m + 1, dtype=complex)  # j * l_j
        for k in range(1, m + 1):
            lo = max(1, k - k_hi)
            s = np.dot(jl[lo:k], q[k - lo:0:-1]) if k > lo else 0
            jl[k] = k * q[k] - s
            l[k] = jl[k] / k
        return TaylorTruncation(m, l)
    with mpmath.workdps(dps):
        a0 = mpmath.mpmathify(a[0])
        q = [mpmath.mpmathify(x) / a0 for x in a]
        deg = len(q) - 1
        jl = [mpmath.mpc(0)] * (m + 1)
        out = np.zeros(m + 1, dtype=complex)
        out[0] = complex(mpmath.log(a0))
        for k in range(1, m + 1):
            s = mpmath.mpc(k * q[k]) if k <= deg else mpmath.mpc(0)
            for i in range(1, min(k - 1, deg) + 1):
                s -= jl[k - i] * q[i]
            jl[k] = s
            out[k] = complex(s / k)
        return TaylorTruncation(m, out)


@dataclass(frozen=True)
class ConformalMap:
    """The map psi of the unit disk onto the plane minus the rays
    ``Re s = 1/2, |Im s| >= tau/2``."""

    tau: float

    @property
    def sigma(self) -> float:
        return 1 / (self.tau + math.sqrt(self.tau ** 2 + 1))

    @property
    def c(self) -> complex:
        return 1j * self.sigma

    def A(self, z: complex) -> complex:
        return (z + self.c) / (1 + self.c.conjugate() * z)

    def psi(self, z: complex) -> complex:
        w = self.A(z)
        return 0.5 + 1j * self.tau * w / (1 + w * w)

    def preimage(self, s: complex) -> complex:
        """The z in the unit disk with ``psi(z) = s``."""
        v = -2j * (s - 0.5) / self.tau
        if v == 0:
            zeta = 0j
        else:
            r = cmath.sqrt(1 - v * v)
            zeta = min(((1 - r) / v, (1 + r) / v), key=abs)
        c = self.c
        return (zeta - c) / (1 - c.conjugate() * zeta)

    def log_coefficients(self, a: Sequence[float], m: int) -> TaylorTruncation:
        """Series coefficients of ``log Q(psi(z))`` up to ``z**m``."""
        n = len(a) - 1
        dps = 30 + math.ceil(n * math.log10(4 / (1 - self.sigma ** 2))) + math.ceil(math.log10(sum(a)))
        with mpmath.workdps(dps):
            tau = mpmath.mpf(self.tau)
            sigma = 1 / (tau + mpmath.sqrt(tau ** 2 + 1))
            c = mpmath.mpc(0, sigma)
            cb = mpmath.conj(c)
            lin1 = [1, cb]  # 1 + conj(c) z
            lin2 = [c, 1]  # z + c
            Y = _padd(_pmul(lin1, lin1), _pmul(lin2, lin2))
            cross = [1j * tau * x for x in _pmul(lin1, lin2)]
            Cp = _padd([y / 2 for y in Y], cross)
            Cm = _padd([y / 2 for y in Y], [-x for x in cross])
            Cp[0] = mpmath.mpc(0)  # vanishes exactly since psi(0) = 0
            powers_p = [[mpmath.mpc(1)]]
            powers_m = [[mpmath.mpc(1)]]
            for _ in range(n):
                powers_p.append(_pmul(powers_p[-1], Cp))
                powers_m.append(_pmul(powers_m[-1], Cm))
            V = [mpmath.mpc(0)] * (2 * n + 1)
            for k in range(n + 1):
                V = _padd(V, [mpmath.mpf(a[k]) * x for x in _pmul(powers_p[k], powers_m[n - k])])
            lV = log_z_coefficients(V, m, dps).l_coeffs
            lY = log_z_coefficients(Y, m, dps).l_coeffs
        l = lV - n * lY
        l[0] = 0  # Q(psi(0)) = a_0 = 1
        return TaylorTruncation(m, l)


def _pmul(p, q):
    out = [mpmath.mpc(0)] * (len(p) + len(q) - 1)
    for i, x in enumerate(p):
        for j, y in enumerate(q):
            out[i + j] += x * y
    return out


def _padd(p, q):
    out = [mpmath.mpc(0)] * max(len(p), len(q))
    for i, x in enumerate(p):
        out[i] += x
    for i, y in enumerate(q):
        out[i] += y
    return out


@dataclass
class ApproxResult:
    status: str  # "OK" or "OUT_OF_DOMAIN"
    approx: complex | None = None
    m_used: int | None = None
    exact: complex | None = None
    log_error: float | None = None
    z: complex | None = None  # where the composed series is evaluated
    full_order: int | None = None
    full_log_error: float | None = None
    achieved: bool | None = None
    reason: str | None = None

    def to_json(self) -> dict:
        cj = lambda v: None if v is None else to_json(v)
        return {"status": self.status, "m_used": self.m_used, "approx": cj(self.approx), "exact": cj(self.exact),
                "log_error": self.log_error, "full_order": self.full_order, "full_log_error": self.full_log_error,
                "achieved": self.achieved, "reason": self.reason}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def log_difference(x: complex, y: complex) -> float:
    """``min |a - b|`` over logarithms ``a`` of x and ``b`` of y."""
    return abs(cmath.log(x / y))


def approx_partition(G: Graph, params: ModelParams, epsilon: float, cap: int = DEFAULT_CAP,
                     max_order: int = MAX_ORDER) -> ApproxResult:
    """Relative epsilon-approximation of ``Z_G(r xi, b)``.

    The order m is the first at which ``|l_m z^m| / (1 - |z|)`` drops below
    ``epsilon/2``. The exact value and the achieved log-difference are
    reported alongside, as is the result of the full truncation (order at
    which the tail bound falls below 1e-14).
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0 < params.b < 1:
        return ApproxResult("OUT_OF_DOMAIN", reason=f"the approximation needs 0 < b < 1, got b = {params.b}")
    cert = certify_nonvanishing(G, params, cap=cap)
    if cert.verdict != Verdict.PASS:
        return ApproxResult("OUT_OF_DOMAIN", reason=cert.reason or cert.verdict.value)
    xi = params.effective_xi
    a = xi_polynomial(G, params.b, cap).coeffs
    n = len(a) - 1
    exact = z_exact(G, params, cap=cap)
    phi = ConformalMap(math.tan(solve_parabolic(params.d, params.b).theta_b / 2))
    z = phi.preimage(xi / (1 + xi))
    rho = abs(z)
    if rho == 0:
        full = 1
    else:
        full = math.ceil(math.log(FULL_TOL * (1 - rho)) / math.log(rho))
    full = max(1, min(full, max_order))
    series = phi.log_coefficients(a, full)
    l = series.l_coeffs
    terms = np.abs(l) * rho ** np.arange(full + 1)
    bound = terms / (1 - rho)
    m = full
    for k in range(1, full + 1):
        if bound[k] < epsilon / 2 and bound[k - 1] < epsilon / 2 or k == full:
            m = k
            break
    prefactor = (1 + xi) ** n
    approx = cmath.exp(series.evaluate(z, m)) * prefactor
    full_approx = cmath.exp(series.evaluate(z, full)) * prefactor
    err = log_difference(approx, exact)
    return ApproxResult("OK", approx, m, exact, err, z, full, log_difference(full_approx, exact), err < epsilon)
