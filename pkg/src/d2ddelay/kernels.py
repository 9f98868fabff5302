"""Closed-form probability kernels of the storage-node churn process.

Three ingredients feed the delay pipeline:

* ``availability_pmf``  -- distribution of the number of live storage nodes
  seen by a request arriving at a uniformly random instant within a repair
  interval (pure-death process restarted from n every ``delta`` t.u.).
* ``departures_pmf``    -- distribution of how many of x live nodes depart
  during one symbol slot of length ``t_d``.
* ``requester_survival`` / ``requester_departure_window`` -- the requesting
  node's own lifetime carved into slot-aligned windows.

Both pmfs exist in two algebraic forms.  ``Method.PAPER`` is the literal
sum-of-products expression with alternating-sign terms; it cancels
catastrophically in binary64 once n grows and mu*delta shrinks, so any entry
whose rounding-noise bound crosses ``_MP_ESCALATE_*`` is re-evaluated in
40-digit arithmetic.  ``Method.STABLE`` (the default) integrates the
binomial-death transient term by term, with the same guard.
"""

from __future__ import annotations

import math
from enum import Enum
from math import comb, exp, expm1, factorial, fsum

import mpmath as mp

from .errors import NumericalInstabilityError
from .params import SystemParams
from .pmf import Pmf

_EPS = 2.220446049250313e-16
# Noise bounds above which binary64 evaluation is not trusted.  The
# availability bound keeps per-entry error comfortably under 1e-8; the
# departures bound keeps the paper form within 1e-12 of the binomial form.
_MP_ESCALATE_AVAILABILITY = 1e-11
_MP_ESCALATE_DEPARTURES = 1e-14
_MP_DPS = 40


class Method(Enum):
    """Which algebraic form of a kernel to evaluate."""

    PAPER = "paper"
    STABLE = "stable"


def _product_coefficient(a: int, b: int, i: int) -> tuple[int, int]:
    """Exact value of prod_{j=a..b, j!=i} j/(j-i) as a (num, den) integer pair.

    For a >= 1 the numerator is b!/(a-1)! with the factor i removed and the
    denominator telescopes to (-1)^(i-a) (i-a)! (b-i)!.  For a == 0 the j=0
    factor zeroes every term except i == 0, whose product is exactly 1.
    """
    if a == 0:
        return (1, 1) if i == 0 else (0, 1)
    num = factorial(b) // factorial(a - 1) // i
    den = factorial(i - a) * factorial(b - i)
    if (i - a) % 2:
        den = -den
    return num, den


# ---------------------------------------------------------------------------
# availability pmf h(x1)


def _availability_paper_terms(n: int, mu: float, delta: float, x1: int):
    """(num, den, r) triples: the two paper sums merged, coefficient * psi(r)."""
    terms = []
    for i in range(x1, n + 1):
        num, den = _product_coefficient(x1, n, i)
        if num:
            terms.append((num, den, i))
    for i in range(x1 + 1, n + 1):
        num, den = _product_coefficient(x1 + 1, n, i)
        if num:
            terms.append((-num, den, i))
    return terms


def _availability_paper_double(n: int, mu: float, delta: float) -> tuple[list[float], float]:
    # psi(r) = (1 - e^{-r mu delta})/(r mu), with the r=0 limit equal to delta
    psi = [delta] + [-expm1(-r * mu * delta) / (r * mu) for r in range(1, n + 1)]
    masses, worst = [], 0.0
    for x1 in range(n + 1):
        vals = [num / den * psi[r] for num, den, r in _availability_paper_terms(n, mu, delta, x1)]
        masses.append(fsum(vals) / delta)
        worst = max(worst, 4.0 * _EPS * fsum(abs(v) for v in vals) / delta)
    return masses, worst


def _availability_paper_mp(n: int, mu: float, delta: float) -> list[float]:
    with mp.workdps(_MP_DPS):
        mmu, mdelta = mp.mpf(mu), mp.mpf(delta)
        psi = [mdelta] + [-mp.expm1(-r * mmu * mdelta) / (r * mmu) for r in range(1, n + 1)]
        masses = []
        for x1 in range(n + 1):
            s = mp.mpf(0)
            for num, den, r in _availability_paper_terms(n, mu, delta, x1):
                s += mp.mpf(num) / den * psi[r]
            masses.append(float(s / mdelta))
    return masses


def _availability_stable_double(n: int, mu: float, delta: float) -> tuple[list[float], float]:
    psi = [delta] + [-expm1(-r * mu * delta) / (r * mu) for r in range(1, n + 1)]
    masses, worst = [], 0.0
    for x1 in range(n + 1):
        q = n - x1
        scale = comb(n, x1) / delta
        vals = [(-1) ** m * comb(q, m) * psi[x1 + m] for m in range(q + 1)]
        masses.append(scale * fsum(vals))
        worst = max(worst, 4.0 * _EPS * scale * fsum(abs(v) for v in vals))
    return masses, worst


def _availability_stable_mp(n: int, mu: float, delta: float) -> list[float]:
    with mp.workdps(_MP_DPS):
        mmu, mdelta = mp.mpf(mu), mp.mpf(delta)
        psi = [mdelta] + [-mp.expm1(-r * mmu * mdelta) / (r * mmu) for r in range(1, n + 1)]
        masses = []
        for x1 in range(n + 1):
            q = n - x1
            s = mp.mpf(0)
            for m in range(q + 1):
                c = comb(q, m) if m % 2 == 0 else -comb(q, m)
                s += c * psi[x1 + m]
            masses.append(float(comb(n, x1) * s / mdelta))
    return masses


def availability_pmf(params: SystemParams, n: int, method: Method = Method.STABLE) -> Pmf:
    """Pmf of the number of live storage nodes at a request instant, over {0..n}."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    mu, delta = params.mu, params.delta
    if method is Method.PAPER:
        masses, noise = _availability_paper_double(n, mu, delta)
        if noise > _MP_ESCALATE_AVAILABILITY:
            masses = _availability_paper_mp(n, mu, delta)
    else:
        masses, noise = _availability_stable_double(n, mu, delta)
        if noise > _MP_ESCALATE_AVAILABILITY:
            masses = _availability_stable_mp(n, mu, delta)
    total = fsum(masses)
    if abs(total - 1.0) > 1e-9 or any(p < -1e-9 or p > 1.0 + 1e-9 for p in masses):
        raise NumericalInstabilityError(
            f"availability pmf failed normalization for n={n}, delta={delta}: sum={total!r}"
        )
    return Pmf(0, tuple(masses))


# ---------------------------------------------------------------------------
# departures pmf g(f, x)


def _departures_paper_terms(x: int, f: int):
    terms = []
    for i in range(x - f, x + 1):
        num, den = _product_coefficient(x - f, x, i)
        if num:
            terms.append((num, den, i))
    for i in range(x - f + 1, x + 1):
        num, den = _product_coefficient(x - f + 1, x, i)
        if num:
            terms.append((-num, den, i))
    return terms


def _departures_paper_double(x: int, mu: float, t_d: float) -> tuple[list[float], float]:
    ex = [exp(-i * mu * t_d) for i in range(x + 1)]
    masses, worst = [], 0.0
    for f in range(x + 1):
        vals = [num / den * ex[r] for num, den, r in _departures_paper_terms(x, f)]
        masses.append(fsum(vals))
        worst = max(worst, 4.0 * _EPS * fsum(abs(v) for v in vals))
    return masses, worst


def _departures_paper_mp(x: int, mu: float, t_d: float) -> list[float]:
    with mp.workdps(_MP_DPS):
        z = mp.mpf(mu) * mp.mpf(t_d)
        ex = [mp.e ** (-i * z) for i in range(x + 1)]
        masses = []
        for f in range(x + 1):
            s = mp.mpf(0)
            for num, den, r in _departures_paper_terms(x, f):
                s += mp.mpf(num) / den * ex[r]
            masses.append(float(s))
    return masses


def _departures_binomial(x: int, mu: float, t_d: float) -> list[float]:
    # x memoryless lifetimes make the departure count Binomial(x, 1-e^{-mu t_d})
    p = -expm1(-mu * t_d)
    q = exp(-mu * t_d)
    return [comb(x, f) * p**f * q ** (x - f) for f in range(x + 1)]


def departures_pmf(x: int, mu: float, t_d: float, method: Method = Method.STABLE) -> Pmf:
    """Pmf over {0..x} of the number of the x live nodes departing within one slot."""
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    if mu <= 0 or t_d <= 0:
        raise ValueError(f"mu and t_d must be > 0, got mu={mu}, t_d={t_d}")
    if x == 0:
        return Pmf(0, (1.0,))
    if method is Method.PAPER:
        masses, noise = _departures_paper_double(x, mu, t_d)
        if noise > _MP_ESCALATE_DEPARTURES:
            masses = _departures_paper_mp(x, mu, t_d)
    else:
        masses = _departures_binomial(x, mu, t_d)
    total = fsum(masses)
    if abs(total - 1.0) > 1e-9:
        raise NumericalInstabilityError(
            f"departures pmf failed normalization for x={x}, t_d={t_d}: sum={total!r}"
        )
    return Pmf(0, tuple(masses))


# ---------------------------------------------------------------------------
# requester lifetime windows


def requester_survival(i: int, mu: float, t_d: float) -> float:
    """Probability the requester is still in the cell after i download slots."""
    if i < 0:
        raise ValueError(f"i must be >= 0, got {i}")
    return exp(-i * mu * t_d)


def requester_departure_window(i: int, mu: float, t_d: float) -> float:
    """Probability the requester departs during slot i (after slot i-1 completes).

    Computed as a_{i-1} - a_i so the window partition telescopes exactly.
    """
    if i < 1:
        raise ValueError(f"i must be >= 1, got {i}")
    return requester_survival(i - 1, mu, t_d) - requester_survival(i, mu, t_d)
