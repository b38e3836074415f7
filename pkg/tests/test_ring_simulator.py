"""Tests pour le simulateur Monte Carlo."""

from unittest.mock import MagicMock

import numpy as np
import pytest
from pydantic import ValidationError

from ring_analyzer.config import SimulationSettings
from ring_analyzer.core.distribution import exact_distribution
from ring_analyzer.core.errors import DomainError, LivelockGuardError
from ring_analyzer.core.exact_engine import mean_rounds
from ring_analyzer.core.ring_simulator import (
    RoundTrace,
    chi_square_check,
    empirical_t_curve,
    run_election,
    simulate,
    trial_generator,
)
from ring_analyzer.models.segments import SegmentSpec
from ring_analyzer.models.simulation import SimConfig


def forced_rng(candidates: int) -> MagicMock:
    """Générateur dont chaque tirage binomial renvoie ``candidates``."""
    rng = MagicMock(spec=np.random.Generator)
    rng.binomial.return_value = candidates
    return rng


def test_single_candidate_elects_in_one_round() -> None:
    """Test une élection en un tour avec N sauts."""
    rounds, hops = run_election(100, 1.0, forced_rng(1))

    assert (rounds, hops) == (1, 100)


def test_no_candidate_trips_guard() -> None:
    """Test la garde anti-livelock."""
    with pytest.raises(LivelockGuardError, match="exceeded 10 rounds"):
        run_election(10, 1.0, forced_rng(0), max_rounds=10)


def test_trace_records_rounds() -> None:
    """Test la trace tour par tour."""
    rng = MagicMock(spec=np.random.Generator)
    rng.binomial.side_effect = [0, 3, 1]
    trace: RoundTrace = []

    rounds, hops = run_election(8, 1.0, rng, trace=trace)

    assert rounds == 3
    assert hops == 4 * 8
    assert trace == [(8, 0, 0), (8, 3, 24), (3, 1, 8)]


def test_convention_finishes_small_counts() -> None:
    """Test la convention ceil(lg k) sous xi."""
    rng = MagicMock(spec=np.random.Generator)
    rng.binomial.return_value = 3

    rounds, hops = run_election(6, 2.5, rng, convention_xi=4)

    assert rounds == 1 + 2
    assert hops == 3 * 6 + 2 * 3 * 6
    assert run_election(2, 2.5, forced_rng(1), convention_xi=2) == (1, 4)


def test_election_preconditions() -> None:
    """Test n_active >= 2 et t/n <= 1."""
    with pytest.raises(DomainError):
        run_election(1, 0.5, forced_rng(1))
    with pytest.raises(DomainError, match="t/n > 1"):
        run_election(2, 2.5, forced_rng(2))


def test_trial_streams_are_reproducible() -> None:
    """Test que l'essai i a toujours le même flux."""
    a = trial_generator(42, 3).random(4)
    b = trial_generator(42, 3).random(4)
    c = trial_generator(42, 4).random(4)

    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(DomainError, match="unknown RNG"):
        trial_generator(42, 0, "MT19937x")


def test_simulate_report_consistency(small_config: SimConfig) -> None:
    """Test la cohérence interne du rapport."""
    report = simulate(small_config)

    assert report.complete
    assert report.trials_run == small_config.trials
    assert sum(report.round_histogram) + report.tail_fraction == pytest.approx(1.0)
    assert report.analytic_mean == pytest.approx(mean_rounds(50, 1.0).mean)
    assert report.bits_per_round_ratio == pytest.approx(
        report.mean_bits / (50 * report.mean_rounds)
    )
    assert abs(report.z_score) < 5.0


def test_simulate_independent_of_threads(small_config: SimConfig) -> None:
    """Test que le rapport ne dépend pas du nombre de threads."""
    base = SimulationSettings(chunk_size=128)
    single = simulate(small_config, base)
    multi = simulate(small_config, base.model_copy(update={"threads": 4}))

    assert single.model_dump() == multi.model_dump()


def test_simulate_per_processor_agrees(small_config: SimConfig) -> None:
    """Test le tirage processeur par processeur contre l'analyse."""
    config = small_config.model_copy(update={"per_processor": True})

    report = simulate(config)

    assert abs(report.z_score) < 5.0


def test_simulate_on_segment_2_3() -> None:
    """Test une simulation sur [2,3) avec M(2,t) = 1."""
    config = SimConfig(
        ring_size=20, t=2.5, trials=2000, master_seed=1, segment=SegmentSpec.int2to3()
    )

    report = simulate(config)

    assert report.analytic_mean == pytest.approx(mean_rounds(20, 2.5, 2).mean)
    assert abs(report.z_score) < 5.0


def test_sim_config_rejects_pathological_t() -> None:
    """Test le refus de t >= 2 sans convention."""
    with pytest.raises(ValidationError, match="segment convention"):
        SimConfig(ring_size=2, t=2.0, trials=10, master_seed=0)
    with pytest.raises(ValidationError, match="outside segment"):
        SimConfig(
            ring_size=10, t=3.5, trials=10, master_seed=0, segment=SegmentSpec.int2to3()
        )


def test_two_processor_histogram() -> None:
    """Test la loi géométrique de X(2)."""
    report = simulate(SimConfig(ring_size=2, t=1.0, trials=20_000, master_seed=11))

    for j, freq in enumerate(report.round_histogram[:6], start=1):
        p = 2.0**-j
        sigma = (p * (1.0 - p) / report.trials_run) ** 0.5
        assert abs(freq - p) < 5.0 * sigma


def test_chi_square_against_exact(small_config: SimConfig) -> None:
    """Test le chi-deux contre P(n,j) exact."""
    report = simulate(small_config)
    check = chi_square_check(report, exact_distribution(50, 40))

    assert check.dof == 10
    assert check.statistic >= 0.0
    assert check.critical > check.dof
    with pytest.raises(DomainError):
        chi_square_check(report, exact_distribution(50, 5))


def test_empirical_t_curve() -> None:
    """Test la courbe empirique en t."""
    curve = empirical_t_curve(30, [0.8, 1.2], trials=500, master_seed=3)

    assert [p.t for p in curve] == [0.8, 1.2]
    assert all(p.mean_rounds >= 1.0 for p in curve)
    assert empirical_t_curve(30, [], trials=10, master_seed=3) == []
    with pytest.raises(DomainError):
        empirical_t_curve(30, [2.0], trials=10, master_seed=3)


@pytest.mark.slow
def test_large_ring_matches_exact_mean() -> None:
    """Test N = 10^4, 10^5 essais: moyenne, chi-deux et coût en bits."""
    report = simulate(SimConfig(ring_size=10_000, t=1.0, trials=100_000, master_seed=7))
    check = chi_square_check(report, exact_distribution(10_000, 40))
    gap = report.mean_bits / 10_000 - report.mean_rounds

    assert abs(report.z_score) < 3.0
    assert check.passed
    assert abs(gap) < 3.0 * report.wald_stderr
