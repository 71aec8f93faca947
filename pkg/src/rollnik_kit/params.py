"""Model parameters for the operators (-Delta + m^(2/alpha))^(alpha/2) - m."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import DomainError, RegimeError


class Regime(enum.Enum):
    """Branch of the short/long-range envelope formulas, fixed by (d, alpha)."""

    ALPHA_LT_D = "alpha_lt_d"
    ALPHA_EQ_D_EQ_1 = "alpha_eq_d_eq_1"
    ALPHA_GT_D_EQ_1 = "alpha_gt_d_eq_1"


@dataclass(frozen=True)
class ModelParams:
    """Parameters (d, alpha, m, lam) of the generator and its resolvent.

    * ``d``     -- spatial dimension (>= 1)
    * ``alpha`` -- fractional exponent in (0, 2]; alpha = 2 is admitted only
                   for classical (Laplacian) cross-checks
    * ``m``     -- rest mass, >= 0
    * ``lam``   -- resolvent parameter, >= 0; lam = 0 is meaningful only in
                   transient regimes (alpha < d for m = 0, d >= 3 for m > 0)
    """

    d: int
    alpha: float
    m: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        if not (0.0 < self.alpha <= 2.0):
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.m < 0:
            raise DomainError(f"mass must be nonnegative, got {self.m}")
        if self.lam < 0:
            raise DomainError(f"resolvent parameter must be nonnegative, got {self.lam}")
        if self.lam == 0 and not self.transient:
            raise RegimeError(
                "lam = 0 requires a transient semigroup "
                "(alpha < d for m = 0; d >= 3 for m > 0); "
                f"got d={self.d}, alpha={self.alpha}, m={self.m}"
            )

    @property
    def transient(self) -> bool:
        if self.m == 0:
            return self.alpha < self.d
        return self.d >= 3

    @property
    def regime(self) -> Regime:
        if self.alpha < self.d:
            return Regime.ALPHA_LT_D
        if self.d == 1 and self.alpha == 1.0:
            return Regime.ALPHA_EQ_D_EQ_1
        if self.d == 1 and self.alpha > 1.0:
            return Regime.ALPHA_GT_D_EQ_1
        raise RegimeError(
            f"no short/long-range branch for d={self.d}, alpha={self.alpha} "
            "(requires alpha < d, or d = 1)"
        )

    @property
    def rollnik_admissible(self) -> bool:
        """Plain Rollnik-class constraint alpha < d < 2*alpha."""
        return self.alpha < self.d < 2 * self.alpha

    @property
    def extended_admissible(self) -> bool:
        """Extended-class constraint d < 2*alpha."""
        return self.d < 2 * self.alpha

    def require_rollnik(self):
        if not self.rollnik_admissible:
            raise RegimeError(
                f"requires alpha < d < 2*alpha; got d={self.d}, alpha={self.alpha}. "
                "In particular the case alpha = 1 is excluded for d in {1, 2}."
            )

    def require_extended(self):
        if not self.extended_admissible:
            raise RegimeError(
                f"requires d < 2*alpha; got d={self.d}, alpha={self.alpha}"
            )

    def with_lam(self, lam: float) -> "ModelParams":
        return ModelParams(self.d, self.alpha, self.m, lam)

    def with_m(self, m: float) -> "ModelParams":
        return ModelParams(self.d, self.alpha, m, self.lam)
