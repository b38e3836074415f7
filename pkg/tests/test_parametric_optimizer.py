"""Tests pour l'optimisation du paramètre de candidature."""

import numpy as np
import pytest

from ring_analyzer.core.errors import BracketError, DomainError, SingularityError
from ring_analyzer.core.exact_engine import mean_rounds
from ring_analyzer.core.parametric_optimizer import (
    find_t_star,
    limit_mean_derivative_t,
    limit_mean_t,
    m3_on_int2to3,
    relative_gain,
    scan_segment,
    segment_bounds_2_3,
    sign_changes_on_open02,
)
from ring_analyzer.models.segments import SegmentSpec


def test_limit_mean_at_one() -> None:
    """Test M(inf,1) = M(inf)."""
    assert limit_mean_t(1.0, nu=30) == pytest.approx(2.441715879, abs=1e-9)


def test_limit_mean_blows_up_near_poles() -> None:
    """Test la divergence aux bords de (0,2)."""
    assert limit_mean_t(1e-4) > 1e3
    assert limit_mean_t(2.0 - 1e-4) > 1e3
    with pytest.raises(SingularityError, match="pole"):
        limit_mean_t(2.0 - 1e-7)


def test_limit_mean_derivative_matches_finite_difference() -> None:
    """Test M'(inf,t) contre une différence centrée."""
    for t in (0.6, 1.0, 1.4, 2.4):
        h = 1e-5
        numeric = (limit_mean_t(t + h) - limit_mean_t(t - h)) / (2 * h)
        assert limit_mean_derivative_t(t) == pytest.approx(numeric, rel=1e-5, abs=1e-7)


def test_limit_mean_domain() -> None:
    """Test t hors segment et troncature trop petite."""
    with pytest.raises(DomainError, match="outside segment"):
        limit_mean_t(2.5, segment=SegmentSpec.open02())
    with pytest.raises(DomainError, match="too small"):
        limit_mean_t(1.0, nu=2)
    with pytest.raises(SingularityError):
        limit_mean_t(3.0)


@pytest.mark.parametrize("t", [0.5, 1.0, 1.5])
def test_mean_increases_with_n(t: float) -> None:
    """Test M(n,t) croissant en n et borné par M(inf,t)."""
    values = [mean_rounds(n, t).mean for n in range(2, 200)]

    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:], strict=False))
    assert values[-1] < limit_mean_t(t)


def test_single_sign_change() -> None:
    """Test un unique changement de signe de M'(inf,t) sur (0,2)."""
    changes = sign_changes_on_open02()

    assert len(changes) == 1
    assert 1.0 < changes[0] < 1.1


def test_find_t_star() -> None:
    """Test t*, M(inf,t*) et le gain relatif."""
    t_star, m_star = find_t_star(1e-10)

    assert t_star == pytest.approx(1.0654388051, abs=1e-6)
    assert m_star == pytest.approx(2.4348109638, abs=1e-8)
    assert relative_gain(m_star) == pytest.approx(0.0028278945, abs=1e-4)
    assert limit_mean_derivative_t(t_star) == pytest.approx(0.0, abs=1e-7)


def test_find_t_star_tolerance_floor() -> None:
    """Test le refus d'une tolérance inférieure à 1e-10."""
    with pytest.raises(DomainError, match="tolerance"):
        find_t_star(1e-12)


def test_find_t_star_without_bracket(monkeypatch: pytest.MonkeyPatch) -> None:
    """Test BracketError si aucun changement de signe n'est trouvé."""
    from ring_analyzer.core import parametric_optimizer

    monkeypatch.setattr(parametric_optimizer, "sign_changes_on_open02", lambda: [])

    with pytest.raises(BracketError, match="found 0"):
        find_t_star()


def test_m3_on_segment_2_3() -> None:
    """Test la forme close de M(3,t) quand M(2,t) = 1."""
    assert m3_on_int2to3(2.0) == pytest.approx(13.0 / 6.0)
    assert mean_rounds(3, 2.2, convention_xi=2).mean == pytest.approx(
        m3_on_int2to3(2.2), rel=1e-12
    )


def test_segment_bounds_at_two() -> None:
    """Test l'encadrement de M(inf,2)."""
    bounds = segment_bounds_2_3(2.0)

    assert 2.2797 <= bounds.m_inf_t <= 2.34726
    assert bounds.lower == pytest.approx(2.2797, abs=1e-4)
    assert bounds.upper == pytest.approx(2.347264, abs=1e-6)
    assert bounds.lower_ok and bounds.upper_ok
    assert bounds.dprime_lower == pytest.approx(2.26605840, abs=1e-7)


def test_segment_bounds_domain() -> None:
    """Test les bornes hors de [2,3)."""
    with pytest.raises(DomainError):
        segment_bounds_2_3(1.5)
    with pytest.raises(DomainError):
        segment_bounds_2_3(3.0)


def test_scan_segment_2_3_increasing() -> None:
    """Test M'(inf,t) > 0 sur une grille de pas 0.05 de [2, 2.95]."""
    scan = scan_segment(SegmentSpec.int2to3(), 0.05)

    assert not scan.gaps
    assert scan.samples[0].t == 2.0
    assert scan.samples[-1].t == pytest.approx(2.95)
    assert all(s.m_prime_t > 0.0 for s in scan.samples)
    assert scan.monotone_increasing
    assert scan.extremum is None


def test_scan_segment_open02_convex() -> None:
    """Test la convexité et le minimum sur (0,2)."""
    scan = scan_segment(SegmentSpec.open02(), 0.02)
    inner = np.array([s.m_inf_t for s in scan.samples if 0.1 - 1e-9 <= s.t <= 1.9 + 1e-9])

    assert np.all(np.diff(inner, 2) > 0.0)
    assert scan.convexity_ok
    assert scan.extremum is not None
    assert scan.extremum[0] == pytest.approx(1.0654388051, abs=1e-6)


def test_scan_general_segment() -> None:
    """Test un segment (xi, xi+1) avec la convention ceil(lg k)."""
    scan = scan_segment(SegmentSpec.general(4), 0.25)

    assert [s.t for s in scan.samples] == [4.25, 4.5, 4.75]
    assert scan.monotone_increasing is True


@pytest.mark.parametrize("xi", [3, 5])
def test_scan_general_segment_increasing(xi: int) -> None:
    """Test la croissance stricte de M(inf,t) sur (xi, xi+1)."""
    scan = scan_segment(SegmentSpec.general(xi), 0.05)

    assert scan.monotone_increasing is True
    assert scan.extremum is None
    assert scan.gaps == ()
    assert len(scan.samples) == 19
    assert all(s.m_prime_t > 0.0 for s in scan.samples)


def test_scan_invalid_step() -> None:
    """Test le refus d'un pas nul."""
    with pytest.raises(DomainError, match="step"):
        scan_segment(SegmentSpec.open02(), 0.0)
