"""Monte Carlo configuration and report."""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ring_analyzer.models.segments import SegmentKind, SegmentSpec


class SimConfig(BaseModel):
    """Batch of independent elections on a ring of N processors."""

    model_config = ConfigDict(frozen=True)

    ring_size: int = Field(ge=2, description="N, processors on the ring")
    t: float = Field(gt=0.0, description="Candidacy parameter")
    trials: int = Field(ge=1)
    master_seed: int = Field(ge=0, lt=2**64)
    j_max: int = Field(default=40, ge=1, description="Histogram width")
    segment: SegmentSpec | None = Field(
        default=None, description="Convention required for t >= 2"
    )
    per_processor: bool = Field(
        default=False, description="Flip one coin per processor instead of one binomial"
    )

    @model_validator(mode="after")
    def check_candidacy(self) -> "SimConfig":
        """Reject t outside the reachable domain."""
        if self.segment is None or self.segment.kind is SegmentKind.OPEN02:
            if self.t >= 2.0:
                raise ValueError(
                    f"t={self.t} >= 2 needs a segment convention "
                    "(two-processor rounds never elect otherwise)"
                )
        elif not self.segment.contains(self.t):
            raise ValueError(f"t={self.t} outside segment {self.segment.label}")
        if self.t > self.ring_size:
            raise ValueError(f"t={self.t} exceeds ring size {self.ring_size}")
        return self


class SimReport(BaseModel):
    """Monte Carlo estimates with matched analytic predictions.

    ``round_histogram[j-1]`` is the fraction of trials that took j rounds;
    together with ``tail_fraction`` it sums to 1.
    """

    model_config = ConfigDict(frozen=True)

    config: SimConfig
    rng_algorithm: str
    trials_run: int = Field(ge=0)
    complete: bool = Field(description="False when a guard trip stopped the batch")
    mean_rounds: float
    stderr_rounds: float = Field(ge=0.0)
    round_histogram: tuple[float, ...]
    tail_fraction: float = Field(ge=0.0, le=1.0)
    tail_mean_contribution: float = Field(
        ge=0.0, description="(sum of rounds over trials beyond j_max) / trials"
    )
    mean_bits: float = Field(description="Mean pebble hops per election")
    stderr_bits: float = Field(ge=0.0)
    bits_per_round_ratio: float = Field(description="mean_bits / (N mean_rounds)")
    mean_candidates_per_round: float
    wald_gap: float = Field(description="mean of hops/N - t rounds, 0 in expectation")
    wald_stderr: float = Field(ge=0.0)
    analytic_mean: float
    z_score: float


class CurvePoint(BaseModel):
    """Empirical mean rounds at one t."""

    model_config = ConfigDict(frozen=True)

    t: float
    mean_rounds: float
    stderr: float


class ChiSquareCheck(BaseModel):
    """Goodness of fit of a round histogram against an exact distribution."""

    model_config = ConfigDict(frozen=True)

    statistic: float = Field(ge=0.0)
    dof: int = Field(ge=1)
    critical: float = Field(description="0.999 quantile of the chi-square law")
    p_value: float = Field(ge=0.0, le=1.0)
    passed: bool
