"""Independent ground-truth generators used by the test suite.

Nothing here shares code with the kernels or the delay pipeline: the
availability law is recovered by numerical integration, the departure law by
scipy's binomial pmf, and the outcome probabilities of tiny instances by
enumerating every attempt path.  They run at test scale only.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import comb, exp, expm1

import numpy as np
from scipy import stats

from .delay import OutcomeDistribution
from .params import CodeParams, SystemParams
from .pmf import Pmf


class QuadratureRule(Enum):
    SIMPSON = "simpson"


@dataclass(frozen=True)
class QuadratureSpec:
    subintervals: int = 1024
    rule: QuadratureRule = QuadratureRule.SIMPSON

    def __post_init__(self) -> None:
        if self.subintervals < 16 or self.subintervals % 2:
            raise ValueError(
                f"subintervals must be even and >= 16, got {self.subintervals}"
            )


def _binomial_death_time_average(n: int, mu: float, delta: float, subintervals: int) -> np.ndarray:
    """(1/delta) * integral over one repair interval of the pure-death state pmf."""
    t = np.linspace(0.0, delta, subintervals + 1)
    p = np.exp(-mu * t)
    weights = np.ones(subintervals + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    weights *= (delta / subintervals) / 3.0
    masses = np.empty(n + 1)
    for x in range(n + 1):
        integrand = comb(n, x) * p**x * (1.0 - p) ** (n - x)
        masses[x] = float(integrand @ weights) / delta
    return masses


def availability_quadrature(
    n: int, mu: float, delta: float, spec: QuadratureSpec = QuadratureSpec()
) -> Pmf:
    """Simpson-rule reference for the storage-availability pmf."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return Pmf(0, tuple(_binomial_death_time_average(n, mu, delta, spec.subintervals)))


def availability_quadrature_refined(
    n: int,
    mu: float,
    delta: float,
    start: int = 1024,
    tol: float = 1e-12,
    max_subintervals: int = 1 << 18,
) -> Pmf:
    """Double the mesh until successive estimates agree within tol."""
    prev = _binomial_death_time_average(n, mu, delta, start)
    subintervals = start
    while subintervals < max_subintervals:
        subintervals *= 2
        cur = _binomial_death_time_average(n, mu, delta, subintervals)
        if np.max(np.abs(cur - prev)) < tol:
            return Pmf(0, tuple(cur))
        prev = cur
    return Pmf(0, tuple(prev))


def departures_binomial(x: int, mu: float, t_d: float) -> Pmf:
    """Binomial(x, 1 - e^{-mu t_d}) reference for the per-slot departure pmf."""
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    if x == 0:
        return Pmf(0, (1.0,))
    p = -expm1(-mu * t_d)
    masses = stats.binom.pmf(np.arange(x + 1), x, p)
    return Pmf(0, tuple(float(v) for v in masses))


#: Enumeration cost grows as (n+1)!-like path trees; these caps keep it exact
#: and instant.
_MAX_N = 3
_MAX_K = 2


def exhaustive_outcome_small(params: SystemParams, code: CodeParams) -> OutcomeDistribution:
    """Outcome probabilities of a tiny instance by brute-force path enumeration.

    Walks every (x1, per-slot departure count, chosen-node fate) path of the
    attempt chain to get the node-side success/failure law, then combines it
    with the requester's slot-aligned lifetime windows.  No recursion tables,
    no kernel code.
    """
    n, k = code.n, code.k
    if n > _MAX_N or k > _MAX_K:
        raise ValueError(
            f"instance too large for exhaustive enumeration: ({n},{k}) exceeds ({_MAX_N},{_MAX_K})"
        )
    mu, t_d = params.mu, params.t_d
    h = availability_quadrature_refined(n, mu, params.delta)
    p_dep = -expm1(-mu * t_d)

    # node-side law: node_fail[j] = P(attempts 1..j succeed, attempt j+1 fails)
    node_fail = [0.0] * k
    node_success = 0.0

    def walk(x: int, attempt: int, prob: float) -> None:
        nonlocal node_success
        if x == 0:
            node_fail[attempt - 1] += prob
            return
        for f in range(x + 1):
            pf = prob * float(stats.binom.pmf(f, x, p_dep))
            if f > 0:
                node_fail[attempt - 1] += pf * f / x
            keep = pf * (x - f) / x
            if keep == 0.0:
                continue
            if attempt == k:
                node_success += keep
            else:
                walk(x - f - 1, attempt + 1, keep)

    for x1, mass in h:
        if x1 == 0:
            node_fail[0] += mass
        else:
            walk(x1, 1, mass)

    def survives(i: int) -> float:
        return exp(-i * mu * t_d)

    def departs_in(i: int) -> float:
        return survives(i - 1) - survives(i)

    p_fail = departs_in(1) + survives(1) * node_fail[0]
    p_partial = []
    for j in range(1, k):
        succ_through_j = sum(node_fail[j:]) + node_success
        p_partial.append(succ_through_j * departs_in(j + 1) + survives(j + 1) * node_fail[j])
    p_full = survives(k) * node_success
    return OutcomeDistribution(
        p_fail_first=p_fail, p_partial=tuple(p_partial), p_full=p_full
    )
