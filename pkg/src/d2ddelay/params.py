"""Cell-level stochastic parameters and erasure-code dimensions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Parameters of one cell.

    m       expected number of nodes in the cell
    mu      departure rate per node (1/t.u.)
    omega   file request rate per node (1/t.u.)
    t_d     time to download one coded symbol over a D2D link (t.u.)
    t_bs    time to download one coded symbol from the base station (t.u.)
    delta   repair interval between storage-list broadcasts (t.u.)
    lam     arrival rate per unit of m (1/t.u.); the stationarity
            assumption requires lam == mu, so omitting it derives lam
            from mu and passing a different value is rejected.
    """

    m: float
    mu: float
    omega: float
    t_d: float
    t_bs: float
    delta: float
    lam: float | None = None

    def __post_init__(self) -> None:
        for name in ("m", "mu", "omega", "t_d", "t_bs", "delta"):
            _require_finite(name, getattr(self, name))
        if self.m <= 0:
            raise ValueError(f"m must be > 0, got {self.m}")
        if self.mu <= 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        for name in ("t_d", "t_bs", "delta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.lam is None:
            object.__setattr__(self, "lam", self.mu)
        else:
            _require_finite("lam", self.lam)
            if self.lam != self.mu:
                raise ValueError(
                    f"lam must equal mu (stationary population), got lam={self.lam}, mu={self.mu}"
                )
        if self.t_bs < self.t_d:
            # Model premise is t_bs >> t_d; the formulas stay valid, so only warn.
            warnings.warn(
                f"t_bs={self.t_bs} is smaller than t_d={self.t_d}; "
                "the model assumes BS downloads are the slow path",
                stacklevel=2,
            )


@dataclass(frozen=True)
class CodeParams:
    """(n, k) MDS code: any k of the n stored coded symbols recover the file."""

    n: int
    k: int

    def __post_init__(self) -> None:
        if not (isinstance(self.n, int) and isinstance(self.k, int)):
            raise ValueError(f"n and k must be integers, got n={self.n!r}, k={self.k!r}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"code requires 1 <= k <= n, got ({self.n}, {self.k})")

    def warn_if_large_for(self, m: float) -> None:
        """The analysis assumes n much smaller than the cell population."""
        if self.n > m / 3:
            warnings.warn(
                f"n={self.n} is not small against m={m}; "
                "the storage-depletion model becomes optimistic",
                stacklevel=2,
            )
