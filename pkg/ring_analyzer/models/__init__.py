"""Pydantic models exchanged between the analysis modules."""

from ring_analyzer.models.distribution import RoundDistribution, TailLaw
from ring_analyzer.models.limits import (
    AsymConstants,
    BoundSequence,
    LimitReport,
    PanelRow,
)
from ring_analyzer.models.manifest import OutputFormat, RunManifest, Subcommand
from ring_analyzer.models.moments import (
    BinomialWeight,
    CandidacyParam,
    MgfValue,
    Normalizer,
    RoundMoments,
)
from ring_analyzer.models.segments import (
    ParamScan,
    ScanSample,
    SegmentBounds,
    SegmentKind,
    SegmentSpec,
)
from ring_analyzer.models.simulation import (
    ChiSquareCheck,
    CurvePoint,
    SimConfig,
    SimReport,
)

__all__ = [
    "AsymConstants",
    "BinomialWeight",
    "BoundSequence",
    "ChiSquareCheck",
    "CandidacyParam",
    "CurvePoint",
    "LimitReport",
    "MgfValue",
    "Normalizer",
    "OutputFormat",
    "PanelRow",
    "ParamScan",
    "RoundDistribution",
    "RoundMoments",
    "RunManifest",
    "ScanSample",
    "SegmentBounds",
    "SegmentKind",
    "SegmentSpec",
    "SimConfig",
    "SimReport",
    "Subcommand",
    "TailLaw",
]
