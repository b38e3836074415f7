"""Tests pour les modèles de données."""

import pytest
from pydantic import ValidationError

from ring_analyzer.core.errors import (
    EXIT_DOMAIN,
    EXIT_FIT,
    EXIT_SINGULARITY,
    EXIT_VALIDATION,
    BracketError,
    DomainError,
    SingularityError,
    ValidationFailure,
    exit_code_for,
)
from ring_analyzer.models import (
    CandidacyParam,
    OutputFormat,
    RunManifest,
    SegmentKind,
    SegmentSpec,
    Subcommand,
)
from ring_analyzer.models.segments import ceil_lg, segment_for


def test_candidacy_probability() -> None:
    """Test t/n et ses préconditions."""
    param = CandidacyParam(t=1.5)

    assert param.probability(3) == 0.5
    with pytest.raises(DomainError):
        param.probability(1)
    with pytest.raises(ValidationError):
        CandidacyParam(t=float("nan"))


def test_ceil_lg() -> None:
    """Test ceil(lg k)."""
    assert [ceil_lg(k) for k in range(1, 10)] == [0, 1, 2, 2, 3, 3, 3, 3, 4]


def test_segment_constructors() -> None:
    """Test les segments prédéfinis et leur convention."""
    assert SegmentSpec.open02().convention_xi is None
    assert SegmentSpec.int2to3().convention_xi == 2
    assert SegmentSpec.int2to3().label == "[2,3)"
    general = SegmentSpec.general(5)
    assert general.convention_xi == 5
    assert general.base_convention == 3.0
    assert general.label == "(5,6)"
    with pytest.raises(DomainError):
        SegmentSpec.general(2)


def test_segment_contains() -> None:
    """Test l'appartenance aux segments, fermé en 2 sur [2,3)."""
    assert SegmentSpec.int2to3().contains(2.0)
    assert not SegmentSpec.int2to3().contains(3.0)
    assert not SegmentSpec.open02().contains(2.0)
    assert not SegmentSpec.open02().contains(1e-7, margin=1e-6)


def test_segment_kind_consistency() -> None:
    """Test la validation du couple (kind, xi)."""
    with pytest.raises(ValidationError, match="requires xi"):
        SegmentSpec(lo=4.0, hi=5.0, kind=SegmentKind.GENERAL_XI)
    with pytest.raises(ValidationError, match="only allowed"):
        SegmentSpec(lo=0.0, hi=2.0, kind=SegmentKind.OPEN02, xi=4)


def test_segment_for() -> None:
    """Test l'inférence du segment et les pôles."""
    assert segment_for(1.0).kind is SegmentKind.OPEN02
    assert segment_for(2.0).kind is SegmentKind.INT2TO3
    assert segment_for(4.5).xi == 4
    with pytest.raises(SingularityError):
        segment_for(0.0)
    with pytest.raises(SingularityError):
        segment_for(3.0)
    with pytest.raises(DomainError):
        segment_for(-1.0)


def test_manifest_to_argv() -> None:
    """Test la reconstruction de la ligne de commande."""
    manifest = RunManifest(
        subcommand=Subcommand.DISTRIBUTION,
        parameters={"n": "inf", "j_max": 30, "t": 1.0, "overlay": True, "nu": None},
        format=OutputFormat.JSON,
        seed=7,
        version="0.1.0",
    )

    assert manifest.to_argv() == [
        "distribution",
        "--format",
        "json",
        "--seed",
        "7",
        "--n",
        "inf",
        "--j-max",
        "30",
        "--t",
        "1.0",
        "--overlay",
    ]


def test_exit_codes() -> None:
    """Test la table des codes de sortie."""
    assert exit_code_for(DomainError("x")) == EXIT_DOMAIN
    assert exit_code_for(SingularityError("x")) == EXIT_SINGULARITY
    assert exit_code_for(BracketError("x")) == EXIT_FIT
    assert exit_code_for(ValidationFailure("x")) == EXIT_VALIDATION
    assert exit_code_for(RuntimeError("x")) == 1


def test_error_context() -> None:
    """Test le contexte structuré des erreurs."""
    error = DomainError("n too small", n=1)

    assert error.message == "n too small"
    assert error.context == {"n": 1}
    assert isinstance(error, ValueError)
