"""Model parameters for the focusing NLS with an attractive singular potential.

The equation under study is

    i u_t = -Lap(u) - gamma V(x) u - |u|^(p-1) u,

with V(x) = |x|^(-alpha) (inverse-power kind) or V = delta_0 (delta kind,
1D only).  Admissible parameters: N >= 1, gamma > 0, 0 < alpha < min(2, N),
and 1 + 4/N < p < 1 + 4/(N-2) (upper bound is +inf for N = 1, 2).  The
dilation exponent beta = N(p-1)/2 then always exceeds 2, which is the
supercriticality that drives every instability mechanism in this package.

gamma = 0 is accepted as the nonpotential reference model used by the
independent soliton oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

POTENTIAL_KINDS = ("inverse_power", "delta")


@dataclass(frozen=True)
class ModelParams:
    """Validated parameter tuple (N, gamma, alpha, p, omega).

    beta = N(p-1)/2 is derived.  For the delta potential the scaling
    exponent alpha is fixed to 1 (G(v^lam) = lam * G(v) for G = gamma|v(0)|^2).
    """

    dimension: int
    gamma: float
    alpha: float
    p: float
    omega: float
    potential_kind: str = "inverse_power"

    def __post_init__(self):
        n = self.dimension
        if not isinstance(n, int) or n < 1:
            raise ValueError(f"dimension must be a positive integer, got {n!r}")
        if not (self.gamma >= 0.0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")
        if self.potential_kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential_kind {self.potential_kind!r}")
        if self.potential_kind == "delta":
            if n != 1:
                raise ValueError("delta potential requires dimension 1")
            if self.alpha != 1.0:
                raise ValueError("delta potential fixes alpha = 1 for scaling")
        else:
            if not (0.0 < self.alpha < min(2.0, float(n))):
                raise ValueError(
                    f"alpha must satisfy 0 < alpha < min(2, N); got alpha={self.alpha}, N={n}"
                )
        p_low = 1.0 + 4.0 / n
        p_high = math.inf if n <= 2 else 1.0 + 4.0 / (n - 2)
        if not (p_low < self.p < p_high):
            raise ValueError(
                f"p must satisfy 1 + 4/N < p < 1 + 4/(N-2); got p={self.p}, N={n}"
            )
        if not math.isfinite(self.omega):
            raise ValueError("omega must be finite")

    @property
    def beta(self) -> float:
        """Dilation homogeneity of the nonlinear term, N(p-1)/2 > 2."""
        return self.dimension * (self.p - 1.0) / 2.0

    @property
    def is_delta(self) -> bool:
        return self.potential_kind == "delta"

    def with_omega(self, omega: float) -> "ModelParams":
        return replace(self, omega=omega)

    def with_gamma(self, gamma: float) -> "ModelParams":
        return replace(self, gamma=gamma)

    def without_potential(self) -> "ModelParams":
        """The gamma = 0 reference model at the same (N, p, omega)."""
        return replace(self, gamma=0.0, potential_kind="inverse_power",
                       alpha=self.alpha if self.potential_kind == "inverse_power" else 0.5)
