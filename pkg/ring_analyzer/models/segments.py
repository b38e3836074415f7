"""Parameter segments of t and the scan/bound results computed on them."""

import math
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):  # type: ignore[no-redef]
        __str__ = str.__str__
        __format__ = str.__format__

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ring_analyzer.core.errors import DomainError, SingularityError


class SegmentKind(StrEnum):
    """Segment of the candidacy parameter t."""

    OPEN02 = "open02"
    INT2TO3 = "int2to3"
    GENERAL_XI = "general_xi"


class SegmentSpec(BaseModel):
    """A t-segment and the base convention that keeps M(k,t) finite on it.

    On (0,2) the recurrence is used as is. On [2,3) and on (xi, xi+1) the
    small active counts k <= xi get the deterministic value ceil(lg k).
    """

    model_config = ConfigDict(frozen=True)

    lo: float
    hi: float
    kind: SegmentKind
    xi: int | None = Field(default=None, ge=3)
    base_convention: float | None = Field(
        default=None, description="Value assigned to M(ceil(lo), t)"
    )

    @model_validator(mode="after")
    def check_kind(self) -> "SegmentSpec":
        """Keep bounds, xi and kind consistent."""
        if self.kind is SegmentKind.GENERAL_XI:
            if self.xi is None:
                raise ValueError("general_xi segment requires xi")
            if (self.lo, self.hi) != (self.xi, self.xi + 1):
                raise ValueError(f"general_xi bounds must be ({self.xi}, {self.xi + 1})")
        elif self.xi is not None:
            raise ValueError(f"xi is only allowed on general_xi, got {self.kind}")
        return self

    @classmethod
    def open02(cls) -> "SegmentSpec":
        """The segment (0, 2) where t* lives."""
        return cls(lo=0.0, hi=2.0, kind=SegmentKind.OPEN02)

    @classmethod
    def int2to3(cls) -> "SegmentSpec":
        """The segment [2, 3) with M(2,t) = 1."""
        return cls(lo=2.0, hi=3.0, kind=SegmentKind.INT2TO3, base_convention=1.0)

    @classmethod
    def general(cls, xi: int) -> "SegmentSpec":
        """The segment (xi, xi+1) with M(xi,t) = ceil(lg xi)."""
        if xi < 3:
            raise DomainError(f"general segments need xi >= 3, got xi={xi}", xi=xi)
        return cls(
            lo=float(xi),
            hi=float(xi + 1),
            kind=SegmentKind.GENERAL_XI,
            xi=xi,
            base_convention=float(ceil_lg(xi)),
        )

    @property
    def convention_xi(self) -> int | None:
        """Largest active count handled by the ceil(lg k) convention."""
        if self.kind is SegmentKind.OPEN02:
            return None
        if self.kind is SegmentKind.INT2TO3:
            return 2
        return self.xi

    @property
    def label(self) -> str:
        """Interval notation, e.g. ``(0,2)`` or ``[2,3)``."""
        left = "[" if self.kind is SegmentKind.INT2TO3 else "("
        return f"{left}{self.lo:g},{self.hi:g})"

    def contains(self, t: float, margin: float = 0.0) -> bool:
        """Whether t is inside the segment, at least ``margin`` from open ends."""
        if self.kind is SegmentKind.INT2TO3:
            return self.lo <= t < self.hi - margin
        return self.lo + margin < t < self.hi - margin


def ceil_lg(k: int) -> int:
    """ceil(log2 k) for k >= 1."""
    return (k - 1).bit_length()


def segment_for(t: float) -> SegmentSpec:
    """Infer the segment holding t.

    Raises:
        DomainError: If t < 0 or not finite
        SingularityError: If t is 0 or an integer >= 3 (poles between segments)
    """
    if not math.isfinite(t) or t < 0.0:
        raise DomainError(f"t must be a finite real >= 0, got t={t}", t=t)
    if t == 0.0:
        raise SingularityError("t=0 is a pole: no processor ever volunteers", t=t)
    if t < 2.0:
        return SegmentSpec.open02()
    if t < 3.0:
        return SegmentSpec.int2to3()
    xi = math.floor(t)
    if t == xi:
        raise SingularityError(f"t={t} is an integer pole between segments", t=t)
    return SegmentSpec.general(xi)


class ScanSample(BaseModel):
    """One grid point of a segment scan."""

    model_config = ConfigDict(frozen=True)

    t: float
    m_inf_t: float
    m_prime_t: float


class ParamScan(BaseModel):
    """Sampled M(inf,t) and M'(inf,t) over a segment."""

    model_config = ConfigDict(frozen=True)

    segment: SegmentSpec
    step: float = Field(gt=0.0)
    samples: tuple[ScanSample, ...]
    extremum: tuple[float, float] | None = Field(
        default=None, description="(t_star, m_star), open02 only"
    )
    convexity_ok: bool = Field(
        default=False, description="All second differences > 0 (open02 only)"
    )
    monotone_increasing: bool | None = Field(
        default=None, description="Samples strictly increasing (other segments)"
    )
    gaps: tuple[float, ...] = Field(
        default=(), description="Grid points whose evaluation failed"
    )


class SegmentBounds(BaseModel):
    """Closed-form bounds on [2,3) evaluated against the recurrence."""

    model_config = ConfigDict(frozen=True)

    t: float
    upper: float
    lower: float
    dprime_lower: float
    m_inf_t: float
    m_prime_t: float
    lower_ok: bool
    upper_ok: bool
    derivative_ok: bool
