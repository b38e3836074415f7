"""Tests pour le moteur exact."""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from ring_analyzer.config import NumericsSettings
from ring_analyzer.core.errors import DomainError, SingularityError
from ring_analyzer.core.exact_engine import (
    FULL_ROW_LIMIT,
    ExactEngine,
    binomial_row,
    binomial_weight,
    mean_rounds,
    mean_rounds_derivative,
    mgf,
    moment_table,
    normalizer,
    normalizer_bounds,
    recurrence_residual,
    second_moment_rounds,
)
from ring_analyzer.core.parametric_optimizer import m3_on_int2to3


def m2_closed(t: float) -> float:
    return 2.0 / (t * (2.0 - t))


def m3_closed(t: float) -> float:
    return (18.0 - 3.0 * t - 2.0 * t**2) / (3.0 * t * (2.0 - t) * (3.0 - t))


def test_binomial_weight_single_candidate() -> None:
    """Test b(n,1;t) = t (1 - t/n)^(n-1)."""
    weight = binomial_weight(10, 1, 1.0)

    assert weight.value == pytest.approx(0.9**9, rel=1e-12)
    assert binomial_weight(10, 1, 1.5).value == pytest.approx(1.5 * 0.85**9, rel=1e-12)


def test_binomial_row_sums_to_one() -> None:
    """Test que chaque ligne complète est une loi de probabilité."""
    for n in (2, 7, 100, 2000):
        row = binomial_row(n, 1.0)
        assert row.size == n + 1
        assert float(np.sum(row)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [FULL_ROW_LIMIT + 1, 10_000, 1_000_000])
@pytest.mark.parametrize("t", [0.5, 1.5])
def test_truncated_row_sums_to_one(n: int, t: float) -> None:
    """Test la normalisation des lignes tronquées (n > 2048)."""
    row = binomial_row(n, t)

    assert row.size < n + 1
    assert float(np.sum(row)) == pytest.approx(1.0, abs=1e-12)


def test_binomial_row_matches_weight() -> None:
    """Test l'accord entre la ligne cumulée et betaln."""
    row = binomial_row(500, 1.2)
    for k in (0, 1, 2, 5, 20):
        assert row[k] == pytest.approx(binomial_weight(500, k, 1.2).value, rel=1e-10)


def test_binomial_weight_invalid() -> None:
    """Test les préconditions de b(n,k;t)."""
    with pytest.raises(DomainError, match="k must be in 0..n"):
        binomial_weight(5, 6, 1.0)
    with pytest.raises(DomainError, match="t/n must be <= 1"):
        binomial_weight(2, 1, 2.5)
    with pytest.raises(DomainError, match="finite real"):
        binomial_weight(5, 1, -1.0)


def test_normalizer_values() -> None:
    """Test lambda(2,1) = 2 et lambda(3,1) = 3/2."""
    assert normalizer(2, 1.0).value == pytest.approx(2.0, rel=1e-14)
    assert normalizer(3, 1.0).value == pytest.approx(1.5, rel=1e-14)


def test_normalizer_pole() -> None:
    """Test la singularité lambda(2,2)."""
    with pytest.raises(SingularityError, match="vanishes"):
        normalizer(2, 2.0)
    with pytest.raises(DomainError):
        normalizer(1, 0.5)
    with pytest.raises(DomainError):
        normalizer(2, 2.5)


@pytest.mark.parametrize("t", [0.5, 1.0, 1.5])
def test_normalizer_increasing_to_limit(t: float) -> None:
    """Test lambda(n,t) croissant en n (n >= 6) vers 1/(1 - e^-t)."""
    values = np.array([normalizer(n, t).value for n in range(6, 2001)])

    assert np.all(np.diff(values) > 0.0)
    limit = 1.0 / -math.expm1(-t)
    assert values[-1] < limit
    assert normalizer(1_000_000, t).value == pytest.approx(limit, rel=1e-5)


@pytest.mark.parametrize("n", [5, 50, 1000])
@pytest.mark.parametrize("t", [0.5, 1.0, 1.5])
def test_normalizer_bounds_bracket(n: int, t: float) -> None:
    """Test que les bornes encadrent lambda(n,t)."""
    lower, upper = normalizer_bounds(n, t)
    value = normalizer(n, t).value

    assert lower <= value <= upper


def test_mean_rounds_small_cases() -> None:
    """Test M(1,t) = 0, M(2,1) = 2 et M(3,1) = 13/6."""
    assert mean_rounds(1, 1.0).mean == 0.0
    assert mean_rounds(2, 1.0).mean == pytest.approx(2.0, rel=1e-14)
    assert mean_rounds(3, 1.0).mean == pytest.approx(13.0 / 6.0, rel=1e-14)


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0, 1.5, 1.9])
def test_mean_rounds_closed_forms(t: float) -> None:
    """Test M(2,t) et M(3,t) contre leurs formes closes."""
    assert mean_rounds(2, t).mean == pytest.approx(m2_closed(t), rel=1e-12)
    assert mean_rounds(3, t).mean == pytest.approx(m3_closed(t), rel=1e-12)


def test_mean_rounds_bounded_by_e() -> None:
    """Test 1 <= M(n,1) < e et la convergence vers M(inf)."""
    table = moment_table(10_000, 1.0)
    values = table.m[2:]

    assert np.all(values >= 1.0)
    assert np.all(values < math.e)
    assert table.mean(10_000) == pytest.approx(2.441715879, abs=1e-3)


def test_second_moment_small_case() -> None:
    """Test M2(2,1) = 6 et la variance géométrique 2."""
    result = second_moment_rounds(2, 1.0)

    assert result.second_moment == pytest.approx(6.0, rel=1e-14)
    assert result.variance == pytest.approx(2.0, rel=1e-13)


def test_variance_approaches_limit() -> None:
    """Test la variance à n = 200 proche de la variance limite."""
    result = second_moment_rounds(200, 1.0)

    assert result.variance is not None
    assert result.variance == pytest.approx(2.832554383, abs=0.05)


def test_derivative_two_processors() -> None:
    """Test M'(2,t) contre la dérivée de 2/(t(2-t))."""
    for t in (0.5, 1.0, 1.5):
        expected = -2.0 * (2.0 - 2.0 * t) / (t * (2.0 - t)) ** 2
        assert mean_rounds_derivative(2, t) == pytest.approx(expected, abs=1e-12)
    assert mean_rounds_derivative(1, 1.0) == 0.0


@pytest.mark.parametrize("n", [4, 10, 60])
def test_derivative_matches_finite_difference(n: int) -> None:
    """Test la récurrence dérivée contre une différence centrée."""
    t, h = 1.2, 1e-5
    numeric = (mean_rounds(n, t + h).mean - mean_rounds(n, t - h).mean) / (2 * h)

    assert mean_rounds_derivative(n, t) == pytest.approx(numeric, rel=1e-6, abs=1e-8)


def test_mgf_geometric_case() -> None:
    """Test la fonction génératrice de X(2), géométrique de paramètre 1/2."""
    alpha = 0.3
    half = math.exp(-alpha) / 2.0

    assert mgf(2, alpha).value == pytest.approx(half / (1.0 - half), rel=1e-13)
    assert mgf(50, 0.0).value == pytest.approx(1.0, abs=1e-13)


def test_mgf_nonincreasing_in_alpha() -> None:
    """Test phi(n, alpha) décroissante en alpha."""
    values = np.array([mgf(50, alpha).value for alpha in np.linspace(0.0, 3.0, 31)])

    assert values[0] == pytest.approx(1.0, abs=1e-13)
    assert np.all(np.diff(values) <= 0.0)


def test_mgf_first_order() -> None:
    """Test phi(100, alpha) = 1 - alpha M(100) au premier ordre."""
    alpha = 1e-6
    expected = 1.0 - alpha * mean_rounds(100, 1.0).mean

    assert mgf(100, alpha).value == pytest.approx(expected, abs=1e-9)


def test_mgf_negative_alpha() -> None:
    """Test le refus d'un alpha négatif."""
    with pytest.raises(DomainError, match="alpha"):
        mgf(5, -0.1)


def test_recurrence_residual_small() -> None:
    """Test que la table satisfait la récurrence non normalisée."""
    assert recurrence_residual(moment_table(300, 1.0)) < 1e-10
    assert recurrence_residual(moment_table(100, 0.7)) < 1e-10


def test_unreachable_t_without_convention() -> None:
    """Test t > 2 sans convention de segment."""
    with pytest.raises(DomainError, match="segment convention"):
        mean_rounds(5, 2.5)


def test_convention_values() -> None:
    """Test la convention ceil(lg k) sur [2,3) et au-delà."""
    assert mean_rounds(2, 2.5, convention_xi=2).mean == 1.0
    assert mean_rounds(4, 3.5, convention_xi=4).mean == 2.0
    assert mean_rounds(3, 2.5, convention_xi=2).mean == pytest.approx(
        m3_on_int2to3(2.5), rel=1e-12
    )


def test_table_growth_keeps_values(clean_engine: None) -> None:
    """Test que l'extension d'une table conserve les valeurs déjà calculées."""
    small = moment_table(10, 0.8)
    large = moment_table(50, 0.8)

    assert large.size >= 50
    np.testing.assert_array_equal(small.m[:11], large.m[:11])
    assert not large.m.flags.writeable


def test_concurrent_reads_agree(clean_engine: None) -> None:
    """Test des lectures concurrentes de la même table."""
    with ThreadPoolExecutor(max_workers=8) as pool:
        values = list(pool.map(lambda n: mean_rounds(n, 1.1).mean, [400] * 16))

    assert len(set(values)) == 1


def test_table_cache_evicts_least_recent() -> None:
    """Test le plafond LRU des tables mémorisées."""
    engine = ExactEngine(NumericsSettings(table_cache_size=2))
    first = engine.table(20, 0.5)
    engine.table(20, 0.7)
    assert engine.table(20, 0.5) is first

    engine.table(20, 0.9)

    assert len(engine) == 2
    assert engine.table(20, 0.5) is first
    rebuilt = engine.table(20, 0.7)
    assert rebuilt.mean(20) == pytest.approx(mean_rounds(20, 0.7).mean, rel=1e-14)
    assert len(engine) == 2
