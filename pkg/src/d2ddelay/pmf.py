"""Finite probability mass function on a contiguous integer support."""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum
from typing import Iterator

import numpy as np

from .errors import NumericalInstabilityError

#: Probabilities this far outside [0, 1] are rounding noise and get clamped;
#: anything farther out is treated as a logic error.
CLAMP_TOL = 1e-12
#: A pmf whose masses do not sum to 1 within this tolerance is rejected.
NORMALIZATION_TOL = 1e-9


def clamp_probability(p: float, context: str = "probability") -> float:
    """Clamp values in [-CLAMP_TOL, 0) to 0 and (1, 1+CLAMP_TOL] to 1."""
    if -CLAMP_TOL <= p < 0.0:
        return 0.0
    if 1.0 < p <= 1.0 + CLAMP_TOL:
        return 1.0
    if not 0.0 <= p <= 1.0:
        raise NumericalInstabilityError(f"{context} out of range: {p!r}")
    return p


@dataclass(frozen=True)
class Pmf:
    """Masses over {support_offset, ..., support_offset + len(masses) - 1}."""

    support_offset: int
    masses: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.masses:
            raise ValueError("pmf needs at least one mass")
        clamped = tuple(
            clamp_probability(p, f"pmf mass at {self.support_offset + i}")
            for i, p in enumerate(self.masses)
        )
        object.__setattr__(self, "masses", clamped)
        total = fsum(clamped)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise NumericalInstabilityError(
                f"pmf masses sum to {total!r}, off by {total - 1.0:.3e}"
            )

    @property
    def support(self) -> range:
        return range(self.support_offset, self.support_offset + len(self.masses))

    def mass(self, value: int) -> float:
        """Mass at an integer point; zero outside the support."""
        idx = value - self.support_offset
        if 0 <= idx < len(self.masses):
            return self.masses[idx]
        return 0.0

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(zip(self.support, self.masses))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.masses, dtype=float)

    def tail_sum(self, lo: int) -> float:
        """Sum of masses at support points >= lo."""
        idx = max(0, lo - self.support_offset)
        return fsum(self.masses[idx:])
