"""Interaction kernels: the coefficient stencils that define the stream.

The stream at edge j is the linear combination

    sum_{i=1..k} c_i * (ell(n, j-i+1) - ell(n, j+i))

which is antisymmetric about the edge pair (j, j+1) by construction.
The default two-coefficient kernel (1, -alpha) expands to

    -alpha*ell(j-1) + ell(j) - ell(j+1) + alpha*ell(j+2),

i.e. repulsion from the two adjacent edges and (for alpha > 0)
attraction to the two next-to-adjacent ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class InteractionKernel:
    """Coefficient stencil (c_1, ..., c_k), k >= 1."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        if len(self.coefficients) < 1:
            raise ValueError("kernel needs at least one coefficient")
        object.__setattr__(
            self, "coefficients", tuple(float(c) for c in self.coefficients)
        )

    @property
    def half_width(self) -> int:
        """k: the stream at edge j reads edges j-k+1 .. j+k."""
        return len(self.coefficients)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=np.float64)

    @classmethod
    def default(cls, alpha: float) -> "InteractionKernel":
        """The standard 4-edge stencil (c_1, c_2) = (1, -alpha)."""
        return cls((1.0, -float(alpha)))
