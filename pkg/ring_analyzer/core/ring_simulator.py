"""Monte Carlo simulation of the election protocol on a ring of N processors.

Each round every active processor volunteers with probability t/n; every
candidate sends a pebble once around the ring (N hops). One candidate
elects a leader, several candidates become the new active set, and none
repeats the round with the same active set.
"""

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import structlog
from numpy.random import (
    PCG64,
    PCG64DXSM,
    SFC64,
    BitGenerator,
    Generator,
    Philox,
    SeedSequence,
)
from scipy.stats import chi2, chisquare

from ring_analyzer.config import SimulationSettings, get_settings
from ring_analyzer.core.errors import DomainError, LivelockGuardError
from ring_analyzer.core.exact_engine import mean_rounds
from ring_analyzer.models.distribution import RoundDistribution
from ring_analyzer.models.segments import ceil_lg
from ring_analyzer.models.simulation import (
    ChiSquareCheck,
    CurvePoint,
    SimConfig,
    SimReport,
)

logger = structlog.get_logger(__name__)

BIT_GENERATORS: dict[str, type[BitGenerator]] = {
    "PCG64": PCG64,
    "PCG64DXSM": PCG64DXSM,
    "SFC64": SFC64,
    "Philox": Philox,
}

# (active count, candidates, hops added) per round
RoundTrace = list[tuple[int, int, int]]


def trial_generator(master_seed: int, trial: int, algorithm: str = "PCG64") -> Generator:
    """Independent stream of one trial: child ``trial`` of the master seed."""
    try:
        bit_generator = BIT_GENERATORS[algorithm]
    except KeyError as e:
        raise DomainError(
            f"unknown RNG algorithm {algorithm!r}, expected one of {sorted(BIT_GENERATORS)}"
        ) from e
    return Generator(bit_generator(SeedSequence(master_seed, spawn_key=(trial,))))


def _draw_candidates(rng: Generator, n: int, p: float, per_processor: bool) -> int:
    if per_processor:
        return int(np.count_nonzero(rng.random(n) < p))
    return int(rng.binomial(n, p))


def run_election(
    n_active: int,
    t: float,
    rng: Generator,
    ring_size: int | None = None,
    convention_xi: int | None = None,
    max_rounds: int | None = None,
    per_processor: bool = False,
    trace: RoundTrace | None = None,
) -> tuple[int, int]:
    """Run one election.

    Args:
        n_active: Initially active processors
        t: Candidacy parameter
        rng: Random stream of this trial
        ring_size: Ring length N, hops per pebble (default: n_active)
        convention_xi: Active counts k <= xi finish in ceil(lg k) more rounds
        max_rounds: Livelock guard (default from settings)
        per_processor: Flip n coins instead of drawing one binomial
        trace: If given, receives one entry per round

    Returns:
        (rounds, pebble hops)

    Raises:
        DomainError: If n_active < 2 or t/n > 1 for a reached n
        LivelockGuardError: If the election exceeds ``max_rounds``
    """
    if n_active < 2:
        raise DomainError(f"an election needs n_active >= 2, got {n_active}")
    ring = n_active if ring_size is None else ring_size
    guard = get_settings().simulation.max_rounds if max_rounds is None else max_rounds

    n = n_active
    rounds = 0
    hops = 0
    if convention_xi is not None and n <= convention_xi:
        rounds = ceil_lg(n)
        return rounds, rounds * n * ring
    while True:
        p = t / n
        if p > 1.0:
            raise DomainError(f"t/n > 1 at n={n}, t={t}", n=n, t=t)
        k = _draw_candidates(rng, n, p, per_processor)
        rounds += 1
        hops += k * ring
        if trace is not None:
            trace.append((n, k, k * ring))
        if k == 1:
            return rounds, hops
        if k >= 2:
            n = k
            if convention_xi is not None and n <= convention_xi:
                extra = ceil_lg(n)
                rounds += extra
                hops += extra * n * ring
                if trace is not None:
                    trace.extend((n, n, n * ring) for _ in range(extra))
                return rounds, hops
        if rounds > guard:
            raise LivelockGuardError(
                f"election exceeded {guard} rounds", rounds=rounds, n=n, t=t
            )


def _run_chunk(
    config: SimConfig,
    settings: SimulationSettings,
    start: int,
    stop: int,
    rounds: np.ndarray,
    hops: np.ndarray,
) -> None:
    convention_xi = None if config.segment is None else config.segment.convention_xi
    for trial in range(start, stop):
        rng = trial_generator(config.master_seed, trial, settings.rng_algorithm)
        try:
            rounds[trial], hops[trial] = run_election(
                config.ring_size,
                config.t,
                rng,
                convention_xi=convention_xi,
                max_rounds=settings.max_rounds,
                per_processor=config.per_processor,
            )
        except LivelockGuardError as e:
            logger.error("guard_tripped", trial=trial, **e.context)
            rounds[trial] = -1


def _stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


def simulate(config: SimConfig, settings: SimulationSettings | None = None) -> SimReport:
    """Run ``config.trials`` independent elections and aggregate them.

    Trial i always uses child i of the master seed and writes to slot i, so
    the report does not depend on the number of threads.
    """
    settings = settings or get_settings().simulation
    rounds = np.zeros(config.trials, dtype=np.int64)
    hops = np.zeros(config.trials, dtype=np.int64)
    bounds = [
        (start, min(start + settings.chunk_size, config.trials))
        for start in range(0, config.trials, settings.chunk_size)
    ]
    logger.info(
        "simulation_started",
        ring_size=config.ring_size,
        t=config.t,
        trials=config.trials,
        chunks=len(bounds),
        threads=settings.threads,
    )
    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        futures = [
            pool.submit(_run_chunk, config, settings, start, stop, rounds, hops)
            for start, stop in bounds
        ]
        for future in futures:
            future.result()

    done = rounds >= 0
    complete = bool(np.all(done))
    rounds, hops = rounds[done], hops[done]
    trials_run = int(rounds.size)
    if trials_run == 0:
        raise LivelockGuardError("every trial tripped the round guard", trials=config.trials)

    ring = config.ring_size
    mean = float(np.mean(rounds))
    stderr = _stderr(rounds.astype(np.float64))
    counts = np.bincount(np.minimum(rounds, config.j_max + 1), minlength=config.j_max + 2)
    histogram = counts[1 : config.j_max + 1] / trials_run
    beyond = rounds > config.j_max
    wald = hops / ring - config.t * rounds

    convention_xi = None if config.segment is None else config.segment.convention_xi
    analytic = mean_rounds(ring, config.t, convention_xi).mean
    if stderr > 0.0:
        z_score = (mean - analytic) / stderr
    else:
        z_score = 0.0 if mean == analytic else math.copysign(math.inf, mean - analytic)

    report = SimReport(
        config=config,
        rng_algorithm=settings.rng_algorithm,
        trials_run=trials_run,
        complete=complete,
        mean_rounds=mean,
        stderr_rounds=stderr,
        round_histogram=tuple(float(v) for v in histogram),
        tail_fraction=float(np.count_nonzero(beyond) / trials_run),
        tail_mean_contribution=float(np.sum(rounds[beyond]) / trials_run),
        mean_bits=float(np.mean(hops)),
        stderr_bits=_stderr(hops.astype(np.float64)),
        bits_per_round_ratio=float(np.mean(hops)) / (ring * mean),
        mean_candidates_per_round=float(np.sum(hops)) / (ring * float(np.sum(rounds))),
        wald_gap=float(np.mean(wald)),
        wald_stderr=_stderr(wald),
        analytic_mean=analytic,
        z_score=z_score,
    )
    logger.info(
        "simulation_finished",
        trials_run=trials_run,
        mean_rounds=mean,
        stderr=stderr,
        z_score=z_score,
    )
    return report


def empirical_t_curve(
    ring_size: int,
    t_grid: Sequence[float],
    trials: int,
    master_seed: int,
) -> list[CurvePoint]:
    """Mean rounds over a grid of t, every point on the same seed stream.

    Raises:
        DomainError: If some t is outside (0, 2)
    """
    outside = [t for t in t_grid if not 0.0 < t < 2.0]
    if outside:
        raise DomainError(f"t values must lie in (0, 2), got {outside}")
    curve = []
    for t in t_grid:
        report = simulate(
            SimConfig(ring_size=ring_size, t=t, trials=trials, master_seed=master_seed)
        )
        curve.append(
            CurvePoint(t=t, mean_rounds=report.mean_rounds, stderr=report.stderr_rounds)
        )
    return curve


def chi_square_check(
    report: SimReport, exact: RoundDistribution, bins: int = 10, quantile: float = 0.999
) -> ChiSquareCheck:
    """Compare the first ``bins`` histogram bins plus the tail with exact P(n,j)."""
    if bins > min(report.config.j_max, exact.j_max):
        raise DomainError(f"bins={bins} exceeds the histogram or table width")
    total = report.trials_run
    observed = np.rint(np.asarray(report.round_histogram[:bins]) * total)
    observed = np.append(observed, total - observed.sum())
    probs = np.asarray(exact.probs[:bins])
    expected = np.append(probs, 1.0 - probs.sum()) * total
    statistic, p_value = chisquare(observed, expected)
    critical = float(chi2.ppf(quantile, bins))
    return ChiSquareCheck(
        statistic=float(statistic),
        dof=bins,
        critical=critical,
        p_value=float(p_value),
        passed=bool(statistic < critical),
    )
