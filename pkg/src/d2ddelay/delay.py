"""Analytical download-delay pipeline.

The serial D2D attempt chain is summarized by tables gamma_j(x, f): the joint
probability that attempt j starts with x uncontacted live storage nodes, f of
them depart during slot j, and every earlier attempt succeeded.  From the
tables follow the three download outcomes (complete / partial / failed), the
expected D2D symbol count and occupancy time, the idle probability of the
storage network, and finally the average file download delay and its gain
over always downloading from the base station.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import fsum

import numpy as np

from .errors import ModelInconsistencyError
from .kernels import (
    Method,
    availability_pmf,
    departures_pmf,
    requester_departure_window,
    requester_survival,
)
from .params import CodeParams, SystemParams
from .pmf import clamp_probability

#: Outcome-probability deficits up to this size are rounding and get folded
#: back into the failure outcome; anything larger aborts.
PARTITION_TOL = 1e-8

#: Label recorded in DelaySummary for the idle probability 1/(1 + omega*m*t_eta).
IDLE_FORM_APPROX = "approximate-closed-form"


@dataclass(frozen=True)
class GammaTable:
    """gamma_j(x, f) for j in 1..k, x in 0..n, f in 0..n; zero wherever f > x."""

    n: int
    k: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        expected = (self.k, self.n + 1, self.n + 1)
        if self.values.shape != expected:
            raise ValueError(f"gamma table shape {self.values.shape}, expected {expected}")
        self.values.setflags(write=False)

    def gamma(self, j: int, x: int, f: int) -> float:
        """Entry for attempt j (1-based)."""
        if not 1 <= j <= self.k:
            raise ValueError(f"attempt index j={j} outside 1..{self.k}")
        return float(self.values[j - 1, x, f])

    def level(self, j: int) -> np.ndarray:
        return self.values[j - 1]


@dataclass(frozen=True)
class OutcomeDistribution:
    """Partition of a D2D-served request: failure, partial(j), complete."""

    p_fail_first: float
    p_partial: tuple[float, ...]
    p_full: float

    def __post_init__(self) -> None:
        clamped = tuple(clamp_probability(p, "partial-outcome probability") for p in self.p_partial)
        object.__setattr__(self, "p_partial", clamped)
        object.__setattr__(
            self, "p_fail_first", clamp_probability(self.p_fail_first, "failure probability")
        )
        object.__setattr__(self, "p_full", clamp_probability(self.p_full, "full-download probability"))
        total = self.total()
        if abs(total - 1.0) > PARTITION_TOL:
            raise ModelInconsistencyError(
                f"outcome probabilities sum to {total!r}, deficit {1.0 - total:.3e}"
            )

    def total(self) -> float:
        return fsum((self.p_fail_first, *self.p_partial, self.p_full))


@dataclass(frozen=True)
class DelaySummary:
    """Scalar results of the delay model at one parameter point."""

    eta: float
    t_eta: float
    p_idle: float
    t_dw: float
    t_ref: float
    gain: float
    idle_form: str = IDLE_FORM_APPROX


def gamma_table(params: SystemParams, code: CodeParams, method: Method = Method.STABLE) -> GammaTable:
    """Build gamma_j(x, f) for j = 1..k bottom-up.

    A successful attempt removes the contacted node, so the state can only
    step from x' available nodes to x = x' - f' - 1; the transition sum
    therefore collapses to one term per predecessor departure count f'.
    """
    n, k = code.n, code.k
    mu, t_d = params.mu, params.t_d
    h = availability_pmf(params, n, method).as_array()
    g = np.zeros((n + 1, n + 1))
    for x in range(n + 1):
        g[x, : x + 1] = departures_pmf(x, mu, t_d, method).as_array()

    values = np.zeros((k, n + 1, n + 1))
    values[0] = h[:, None] * g
    # Survival enters once per slot as the conditional factor e^{-mu t_d}:
    # earlier slots' survival is already inside gamma_{j-1}, so the
    # unconditional i-slot probability here would double-count the lifetime.
    step_survival = requester_survival(1, mu, t_d)
    for j in range(1, k):
        prev = values[j - 1]
        reach = np.zeros(n + 1)
        for x in range(n + 1):
            acc = 0.0
            for fp in range(n - x):
                xp = x + fp + 1
                acc += (x + 1) / xp * prev[xp, fp]
            reach[x] = step_survival * acc
        values[j] = reach[:, None] * g
    return GammaTable(n=n, k=k, values=values)


def p_fail_first(params: SystemParams, code: CodeParams, method: Method = Method.STABLE) -> float:
    """Probability that no symbol at all is obtained over D2D."""
    n = code.n
    mu, t_d = params.mu, params.t_d
    h = availability_pmf(params, n, method)
    a1 = requester_survival(1, mu, t_d)
    b1 = requester_departure_window(1, mu, t_d)
    terms = []
    for x in range(1, n + 1):
        g = departures_pmf(x, mu, t_d, method)
        terms.extend(f / x * h.mass(x) * g.mass(f) for f in range(x + 1))
    return clamp_probability(b1 + a1 * h.mass(0) + a1 * fsum(terms), "failure probability")


def p_full(gamma: GammaTable, params: SystemParams, code: CodeParams) -> float:
    """Probability that all k symbols are obtained over D2D."""
    last = gamma.level(code.k)
    a1 = requester_survival(1, params.mu, params.t_d)
    terms = [
        (x - f) / x * last[x, f]
        for x in range(1, code.n + 1)
        for f in range(x + 1)
    ]
    return clamp_probability(a1 * fsum(terms), "full-download probability")


def p_partial(j: int, gamma: GammaTable, params: SystemParams, code: CodeParams) -> float:
    """Probability of obtaining exactly j of k symbols, 1 <= j <= k-1."""
    if not 1 <= j <= code.k - 1:
        raise ValueError(f"partial index j={j} outside 1..{code.k - 1}")
    nxt = gamma.level(j + 1)
    a1 = requester_survival(1, params.mu, params.t_d)
    terms = [nxt[0, 0]]
    terms.extend(
        (1.0 - (x - f) / x * a1) * nxt[x, f]
        for x in range(1, code.n + 1)
        for f in range(x + 1)
    )
    return clamp_probability(fsum(terms), "partial-download probability")


def outcome_distribution(
    params: SystemParams, code: CodeParams, method: Method = Method.STABLE
) -> OutcomeDistribution:
    """Assemble the three download outcomes and enforce their partition of unity."""
    code.warn_if_large_for(params.m)
    gamma = gamma_table(params, code, method)
    fail = p_fail_first(params, code, method)
    partial = tuple(p_partial(j, gamma, params, code) for j in range(1, code.k))
    full = p_full(gamma, params, code)
    deficit = 1.0 - fsum((fail, *partial, full))
    if abs(deficit) > PARTITION_TOL:
        raise ModelInconsistencyError(
            f"outcome partition deficit {deficit:.3e} exceeds {PARTITION_TOL:g} "
            f"for code ({code.n},{code.k}), delta={params.delta}, t_d={params.t_d}"
        )
    fail = clamp_probability(fail + deficit, "failure probability")
    return OutcomeDistribution(p_fail_first=fail, p_partial=partial, p_full=full)


def eta(outcome: OutcomeDistribution, code: CodeParams) -> float:
    """Expected number of symbols obtained over D2D per D2D-served request."""
    value = code.k * outcome.p_full + fsum(
        j * p for j, p in enumerate(outcome.p_partial, start=1)
    )
    if not -1e-12 <= value <= code.k + 1e-9:
        raise ModelInconsistencyError(f"eta={value!r} outside [0, k={code.k}]")
    return min(max(value, 0.0), float(code.k))


def t_eta(outcome: OutcomeDistribution, code: CodeParams, t_d: float) -> float:
    """Expected occupancy of the storage network per D2D-served request (t.u.)."""
    slots = eta(outcome, code) + outcome.p_fail_first + fsum(outcome.p_partial)
    return t_d * slots


def p_idle(params: SystemParams, t_eta_value: float) -> float:
    """Probability the storage network is idle when a request arrives.

    Closed form 1/(1 + omega*m*t_eta): one busy period per admitted request,
    idle gaps memoryless with rate omega*m.
    """
    if t_eta_value < 0:
        raise ValueError(f"t_eta must be >= 0, got {t_eta_value}")
    return 1.0 / (1.0 + params.omega * params.m * t_eta_value)


def avg_download_delay(
    params: SystemParams, code: CodeParams, method: Method = Method.STABLE
) -> DelaySummary:
    """Average file download delay and its gain over BS-only delivery."""
    outcome = outcome_distribution(params, code, method)
    eta_value = eta(outcome, code)
    t_eta_value = t_eta(outcome, code, params.t_d)
    idle = p_idle(params, t_eta_value)
    t_ref = code.k * params.t_bs
    t_dw = idle * (t_eta_value + (code.k - eta_value) * params.t_bs) + (1.0 - idle) * t_ref
    return DelaySummary(
        eta=eta_value,
        t_eta=t_eta_value,
        p_idle=idle,
        t_dw=t_dw,
        t_ref=t_ref,
        gain=t_ref / t_dw,
        idle_form=IDLE_FORM_APPROX,
    )
