"""Models for finite-n quantities of the exact engine."""

import math

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ring_analyzer.core.errors import DomainError


class CandidacyParam(BaseModel):
    """Candidacy parameter t; each of n active processors volunteers with t/n."""

    model_config = ConfigDict(frozen=True)

    t: float = Field(ge=0.0, description="Numerator of the candidacy probability")

    @field_validator("t")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        """Reject NaN and infinities."""
        if not math.isfinite(v):
            raise ValueError(f"t must be finite, got {v}")
        return v

    def probability(self, n: int) -> float:
        """Return t/n for an active count n.

        Raises:
            DomainError: If n < 1 or t/n > 1
        """
        if n < 1:
            raise DomainError(f"active count must be >= 1, got n={n}", n=n)
        p = self.t / n
        if p > 1.0:
            raise DomainError(
                f"candidacy probability t/n must be <= 1, got t={self.t}, n={n}",
                n=n,
                t=self.t,
            )
        return p


class BinomialWeight(BaseModel):
    """Probability b(n,k;t) that exactly k of n processors become candidates."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1, description="Active processors")
    k: int = Field(ge=0, description="Candidates")
    t: float = Field(ge=0.0, description="Candidacy parameter")
    value: float = Field(ge=0.0, le=1.0, description="b(n,k;t)")


class Normalizer(BaseModel):
    """lambda(n,t) = 1/(1 - (1-t/n)^n - (t/n)^n)."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2)
    t: float = Field(ge=0.0)
    value: float = Field(ge=1.0, description="Normalizer, >= 1 on its domain")


class RoundMoments(BaseModel):
    """Moments of the number of rounds X(n) for one (n, t).

    ``second_moment`` and ``variance`` are only filled by the second moment
    operation.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    t: float = Field(ge=0.0)
    mean: float = Field(ge=0.0, description="M(n,t) [rounds]")
    second_moment: float | None = Field(default=None, ge=0.0, description="[rounds^2]")
    variance: float | None = Field(default=None, ge=0.0)
    convention_xi: int | None = Field(
        default=None, description="Segment convention M(k,t)=ceil(lg k) for k <= xi"
    )


class MgfValue(BaseModel):
    """phi(n) = E[exp(-alpha X(n))]."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    alpha: float = Field(ge=0.0)
    t: float = Field(ge=0.0)
    value: float = Field(ge=0.0, le=1.0)
