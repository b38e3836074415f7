"""Service de validation croisée entre les modules.

Chaque contrôle compare une valeur calculée à une constante de référence ou
à un autre module (moteur exact, asymptotique, distribution, optimiseur,
simulateur) et produit une ligne du tableau affiché par ``validate``.
"""

import math
from collections.abc import Callable

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict

from ring_analyzer.config import get_settings
from ring_analyzer.core.asymptotics import (
    asym_constants,
    bound_sequence,
    correction_c1,
    correction_c2_fit,
    limit_second_moment,
)
from ring_analyzer.core.distribution import (
    exact_distribution,
    limit_distribution,
    moment_from_distribution,
    tail_law,
)
from ring_analyzer.core.errors import RingAnalyzerError
from ring_analyzer.core.exact_engine import (
    mean_rounds,
    moment_table,
    recurrence_residual,
)
from ring_analyzer.core.parametric_optimizer import (
    find_t_star,
    limit_mean_t,
    relative_gain,
    scan_segment,
    segment_bounds_2_3,
)
from ring_analyzer.core.ring_simulator import chi_square_check, simulate
from ring_analyzer.models.segments import SegmentSpec
from ring_analyzer.models.simulation import SimConfig

logger = structlog.get_logger(__name__)

M_INF = 2.441715879
M2_INF = 8.794530817
VAR_INF = 2.832554383
C1 = -0.7438715372
C2 = -0.1974635346
RHO = 0.2950911517
TAIL_COEFFICIENT = 2.233499118
T_STAR = 1.0654388051
M_STAR = 2.4348109638
GAIN = 0.0028278945
SEGMENT_2_3_RANGE = (2.2797, 2.34726)
P_INF = (
    0.3678794411,
    0.2625161028,
    0.1634224110,
    0.0946536614,
    0.0524658088,
    0.0282518527,
    0.0149122813,
    0.0077602315,
    0.0039970064,
    0.0020432067,
    0.0010386252,
    0.0005257697,
    0.0002653262,
)


class ValidationCheck(BaseModel):
    """Résultat d'un contrôle."""

    model_config = ConfigDict(frozen=True)

    name: str
    passed: bool
    observed: float
    expected: float
    tolerance: float
    detail: str = ""


def _close(
    name: str, observed: float, expected: float, tolerance: float
) -> ValidationCheck:
    return ValidationCheck(
        name=name,
        passed=abs(observed - expected) <= tolerance,
        observed=observed,
        expected=expected,
        tolerance=tolerance,
    )


def _flag(
    name: str, passed: bool, observed: float = math.nan, detail: str = ""
) -> ValidationCheck:
    return ValidationCheck(
        name=name,
        passed=passed,
        observed=observed,
        expected=math.nan,
        tolerance=math.nan,
        detail=detail,
    )


def check_limit_moments() -> list[ValidationCheck]:
    """Moyenne, second moment et variance limites."""
    report = limit_second_moment(30)
    assert report.m_inf is not None and report.m2_inf is not None
    assert report.var_inf is not None
    return [
        _close("m_inf", report.m_inf, M_INF, 1e-9),
        _close("m2_inf", report.m2_inf, M2_INF, 1e-8),
        _close("var_inf", report.var_inf, VAR_INF, 1e-8),
    ]


def check_corrections() -> list[ValidationCheck]:
    """Coefficients C1 (forme close) et C2 (ajustement)."""
    return [
        _close("c1", correction_c1(30), C1, 1e-8),
        _close("c2_fit_250_300", correction_c2_fit(250, 300), C2, 2e-3),
    ]


def check_limit_distribution() -> list[ValidationCheck]:
    """Les 13 premières valeurs de P(inf,j) et la loi de queue."""
    dist = limit_distribution(60, 30)
    worst = max(abs(dist.prob(j) - P_INF[j - 1]) for j in range(1, 14))
    law = tail_law(15)
    ratio = dist.prob(25) / law.approximation(25)
    return [
        _close("p_inf_1_13_max_error", worst, 0.0, 1e-9),
        _close("rho", law.rho, RHO, 1e-9),
        _close("tail_coefficient", law.coefficient, TAIL_COEFFICIENT, 1e-8),
        _close("tail_ratio_j25", ratio, 1.0, 1e-3),
        _close("sum_j_p_inf", moment_from_distribution(dist, 1), M_INF, 1e-8),
        _close("sum_j2_p_inf", moment_from_distribution(dist, 2), M2_INF, 1e-7),
    ]


def check_optimum() -> list[ValidationCheck]:
    """t*, M(inf,t*) et le gain relatif."""
    t_star, m_star = find_t_star(1e-10)
    return [
        _close("t_star", t_star, T_STAR, 1e-6),
        _close("m_star", m_star, M_STAR, 1e-8),
        _close("relative_gain", relative_gain(m_star), GAIN, 1e-4),
    ]


def check_segments() -> list[ValidationCheck]:
    """Segment [2,3) et convexité sur (0,2)."""
    lo, hi = SEGMENT_2_3_RANGE
    m_two = limit_mean_t(2.0, segment=SegmentSpec.int2to3())
    increasing = scan_segment(SegmentSpec.int2to3(), 0.05)
    derivatives = [s.m_prime_t for s in increasing.samples]
    bounds = segment_bounds_2_3(2.0)
    convex = scan_segment(SegmentSpec.open02(), 0.02)
    inner = [s.m_inf_t for s in convex.samples if 0.1 - 1e-9 <= s.t <= 1.9 + 1e-9]
    second = np.diff(np.asarray(inner), 2)
    return [
        _flag("m_inf_t2_in_range", lo <= m_two <= hi, m_two, f"[{lo}, {hi}]"),
        _flag(
            "segment_2_3_derivative_positive",
            min(derivatives) > 0.0 and not increasing.gaps,
            min(derivatives),
        ),
        _close("segment_2_3_dprime_lower_at_2", bounds.dprime_lower, 2.26605840, 1e-7),
        _flag(
            "segment_2_3_bracket_at_2",
            bounds.lower_ok and bounds.upper_ok,
            m_two,
            f"[{bounds.lower:.6f}, {bounds.upper:.6f}]",
        ),
        _flag("convexity_open02", bool(np.all(second > 0.0)), float(np.min(second))),
    ]


def check_exact_engine() -> list[ValidationCheck]:
    """Formes closes, point fixe de la récurrence et bornes B(n)."""
    worst = 0.0
    for t in (0.25, 0.5, 1.0, 1.5, 1.9):
        m2 = 2.0 / (t * (2.0 - t))
        m3 = (18.0 - 3.0 * t - 2.0 * t**2) / (3.0 * t * (2.0 - t) * (3.0 - t))
        worst = max(
            worst,
            abs(mean_rounds(2, t).mean - m2) / m2,
            abs(mean_rounds(3, t).mean - m3) / m3,
        )
    residual = recurrence_residual(moment_table(1000, 1.0))
    bounds = bound_sequence(10_000)
    table = moment_table(1000, 1.0)
    below = all(table.mean(b.n) <= b.b_n + 1e-12 for b in bounds[1:1000])
    constants = asym_constants()
    scaled = 10_000 * bounds[-1].delta_n
    lead = constants.c1 * constants.c6
    return [
        _close("closed_forms_m2_m3_relative", worst, 0.0, 1e-12),
        _close("recurrence_residual", residual, 0.0, 1e-10),
        _flag("m_below_bound_n_le_1000", below),
        _close("n_delta_n_at_1e4", scaled, lead, 0.01 * lead),
    ]


def check_simulation(
    trials: int | None = None, seed: int | None = None
) -> list[ValidationCheck]:
    """Simulation contre le moteur exact (N = 10^4) et loi géométrique (N = 2)."""
    settings = get_settings().simulation
    trials = settings.validate_trials if trials is None else trials
    seed = settings.default_seed if seed is None else seed

    large = simulate(
        SimConfig(ring_size=10_000, t=1.0, trials=trials, master_seed=seed)
    )
    chi = chi_square_check(large, exact_distribution(10_000, 40, 1.0))
    bits_gap = large.mean_bits / large.config.ring_size - large.mean_rounds

    small = simulate(SimConfig(ring_size=2, t=1.0, trials=trials, master_seed=seed))
    worst_sigma = 0.0
    for j, freq in enumerate(small.round_histogram[:10], start=1):
        p = 2.0**-j
        sigma = math.sqrt(p * (1.0 - p) / small.trials_run)
        worst_sigma = max(worst_sigma, abs(freq - p) / sigma)
    return [
        _flag("sim_mean_z_score", abs(large.z_score) < 3.0, large.z_score),
        _flag("sim_chi_square", chi.passed, chi.statistic, f"critical {chi.critical:.4f}"),
        _flag(
            "sim_bits_per_round",
            abs(bits_gap) < 3.0 * large.wald_stderr,
            bits_gap,
            f"stderr {large.wald_stderr:.3g}",
        ),
        _flag("sim_geometric_n2", worst_sigma < 4.0, worst_sigma, "max |z| over j=1..10"),
    ]


def run_validation(
    include_simulation: bool = True,
    trials: int | None = None,
    seed: int | None = None,
) -> list[ValidationCheck]:
    """Exécute la suite complète de contrôles.

    Un groupe qui lève une erreur produit une ligne en échec au lieu
    d'interrompre la suite.
    """
    groups: list[tuple[str, Callable[[], list[ValidationCheck]]]] = [
        ("limit_moments", check_limit_moments),
        ("corrections", check_corrections),
        ("limit_distribution", check_limit_distribution),
        ("optimum", check_optimum),
        ("segments", check_segments),
        ("exact_engine", check_exact_engine),
    ]
    if include_simulation:
        groups.append(("simulation", lambda: check_simulation(trials, seed)))

    checks: list[ValidationCheck] = []
    for name, group in groups:
        try:
            checks.extend(group())
        except RingAnalyzerError as e:
            logger.error("validation_group_failed", group=name, error=e.message)
            checks.append(_flag(name, False, detail=e.message))
    failed = [c.name for c in checks if not c.passed]
    logger.info("validation_finished", checks=len(checks), failed=failed)
    return checks
