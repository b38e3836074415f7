"""Round-count distribution models."""

from pydantic import BaseModel, ConfigDict, Field


class RoundDistribution(BaseModel):
    """Table of P(X = j) for j = 1..j_max.

    ``n`` is None for the n -> infinity table.
    """

    model_config = ConfigDict(frozen=True)

    n: int | None = Field(default=None, ge=2, description="Ring size, None for the limit")
    t: float = Field(default=1.0, gt=0.0)
    j_max: int = Field(ge=1)
    probs: tuple[float, ...] = Field(description="probs[j-1] = P(X = j)")
    tail_mass: float = Field(ge=0.0, le=1.0, description="P(X > j_max)")

    @property
    def is_limit(self) -> bool:
        """True for the n -> infinity table."""
        return self.n is None

    def prob(self, j: int) -> float:
        """P(X = j), 1-based."""
        return self.probs[j - 1]


class TailLaw(BaseModel):
    """Geometric tail P(inf, j) ~ coefficient * base^j."""

    model_config = ConfigDict(frozen=True)

    rho: float = Field(gt=0.0, lt=1.0)
    coefficient: float = Field(gt=0.0)
    base: float = Field(default=0.5)
    k_max: int = Field(ge=2)

    def approximation(self, j: int) -> float:
        """Tail-law value at j."""
        return float(self.coefficient * self.base**j)
