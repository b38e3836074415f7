"""Models for the n -> infinity constants."""

from pydantic import BaseModel, ConfigDict, Field


class LimitReport(BaseModel):
    """Asymptotic constants at t = 1, each with the truncation used.

    Operations fill the subset of fields they compute; the CLI panel merges
    them into one report.
    """

    model_config = ConfigDict(frozen=True)

    truncation_nu: int = Field(ge=2, description="Last k kept in the Poisson sums")
    tail_bound: float = Field(ge=0.0, description="Bound on the neglected sum tail")
    m_inf: float | None = Field(default=None, description="Limit mean [rounds]")
    m2_inf: float | None = Field(default=None, description="Limit second moment")
    var_inf: float | None = Field(default=None, ge=0.0)
    s1: float | None = Field(default=None, description="sum e^-1/k! M(k)")
    s2: float | None = Field(default=None, description="sum e^-1/k! M2(k)")
    c1: float | None = Field(default=None, description="1/n coefficient")
    c2: float | None = Field(default=None, description="1/n^2 coefficient (fitted)")
    rho: float | None = Field(default=None)
    tail_coefficient: float | None = Field(default=None)


class BoundSequence(BaseModel):
    """One step of the upper-bound recurrence B(n) and its gap to e."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    b_n: float = Field(description="Upper bound on M(n,1)")
    delta_n: float = Field(description="e - B(n)")
    a_n: float = Field(description="Contraction factor of Delta")
    bcoef_n: float = Field(description="Forcing coefficient of Delta")
    delta_estimate: float = Field(description="c1 c6/n + c8/n^2")


class AsymConstants(BaseModel):
    """Constants c0..c8 of the Delta(n) expansion."""

    model_config = ConfigDict(frozen=True)

    c0: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c7: float
    c8: float


class PanelRow(BaseModel):
    """One constant of the limits panel with its error bound."""

    model_config = ConfigDict(frozen=True)

    name: str
    value: float
    error_bound: float = Field(ge=0.0)
