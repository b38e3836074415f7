"""Limit functional M(inf,t) of the candidacy parameter and its minimum.

For a large ring the number of candidates in a round is Poisson(t), so

    M(inf,t) (1 - e^-t) = 1 + sum_k e^-t t^k/k! M(k,t)

with the finite M(k,t) taken from the exact engine under the convention of
the segment holding t.
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import structlog
from scipy.stats import poisson

from ring_analyzer.config import get_settings
from ring_analyzer.core.errors import (
    BracketError,
    DomainError,
    RingAnalyzerError,
    SingularityError,
)
from ring_analyzer.core.exact_engine import moment_table
from ring_analyzer.models.segments import (
    ParamScan,
    ScanSample,
    SegmentBounds,
    SegmentKind,
    SegmentSpec,
    segment_for,
)

logger = structlog.get_logger(__name__)

BRACKET = (0.5, 1.5)
SIGN_SCAN_STEP = 0.01


def default_nu_t(t: float) -> int:
    """Truncation for the Poisson(t) sums; the weights peak near k = t."""
    return max(get_settings().numerics.default_nu, math.ceil(t) + 25)


def _resolve(
    t: float, nu: int | None, segment: SegmentSpec | None
) -> tuple[int, SegmentSpec]:
    segment = segment_for(t) if segment is None else segment
    margin = get_settings().numerics.guard_margin
    if not segment.lo <= t <= segment.hi:
        raise DomainError(f"t={t} outside segment {segment.label}", t=t)
    if not segment.contains(t, margin):
        raise SingularityError(
            f"t={t} is within {margin:g} of a pole of segment {segment.label}",
            t=t,
            segment=segment.label,
        )
    nu = default_nu_t(t) if nu is None else nu
    if nu < max(3, math.ceil(t) + 1):
        raise DomainError(f"nu={nu} too small for t={t}", nu=nu, t=t)
    return nu, segment


def _limit_pair(t: float, nu: int, segment: SegmentSpec) -> tuple[float, float]:
    """(M(inf,t), M'(inf,t)) from one memo table."""
    table = moment_table(nu, t, segment.convention_xi)
    weights = np.asarray(poisson.pmf(np.arange(nu + 1), t))
    m = table.m[: nu + 1]
    no_candidate = -math.expm1(-t)

    m_inf = (1.0 + float(np.dot(weights[2:], m[2:]))) / no_candidate
    # d/dt of e^-t t^k/k! is the (k-1) weight minus the k weight
    shifted = float(np.dot(weights[1:nu], m[2:]))
    derivative_terms = float(np.dot(weights[2:], table.dm[2 : nu + 1]))
    m_prime = (1.0 - m_inf + shifted + derivative_terms) / no_candidate
    return m_inf, m_prime


def limit_mean_t(
    t: float, nu: int | None = None, segment: SegmentSpec | None = None
) -> float:
    """M(inf,t) on the segment holding t.

    Args:
        t: Candidacy parameter
        nu: Truncation (default: max(30, ceil(t) + 25))
        segment: Segment convention (default: inferred from t)

    Raises:
        DomainError: If t is outside the segment or nu is too small
        SingularityError: If t is within the guard margin of a pole
    """
    nu, segment = _resolve(t, nu, segment)
    return _limit_pair(t, nu, segment)[0]


def limit_mean_derivative_t(
    t: float, nu: int | None = None, segment: SegmentSpec | None = None
) -> float:
    """dM(inf,t)/dt from the differentiated limit equation."""
    nu, segment = _resolve(t, nu, segment)
    return _limit_pair(t, nu, segment)[1]


def _bisect_derivative(lo: float, hi: float, tolerance: float) -> float:
    """Root of M'(inf,t) in [lo, hi], which must bracket a sign change."""
    max_iter = get_settings().numerics.bisection_max_iter
    f_lo = limit_mean_derivative_t(lo)
    for iteration in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = limit_mean_derivative_t(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo < tolerance:
            logger.debug("bisection_converged", iterations=iteration + 1, t=mid)
            break
    else:
        logger.warning("bisection_iteration_cap", max_iter=max_iter, width=hi - lo)
    return 0.5 * (lo + hi)


def sign_changes_on_open02(step: float = SIGN_SCAN_STEP) -> list[float]:
    """Grid points of (0,2) after which M'(inf,t) changes sign."""
    grid = np.arange(step, 2.0 - step / 2, step)
    values = [limit_mean_derivative_t(float(t)) for t in grid]
    return [
        float(grid[i])
        for i in range(len(values) - 1)
        if (values[i] < 0.0) != (values[i + 1] < 0.0)
    ]


def find_t_star(tolerance: float = 1e-10) -> tuple[float, float]:
    """Unique minimizer t* of M(inf,t) on (0,2) and the minimum M(inf,t*).

    Raises:
        DomainError: If tolerance < 1e-10
        BracketError: If the derivative does not change sign exactly once
    """
    if tolerance < 1e-10:
        raise DomainError(f"tolerance must be >= 1e-10, got {tolerance}")
    changes = sign_changes_on_open02()
    if len(changes) != 1:
        raise BracketError(
            f"expected one sign change of M'(inf,t) on (0,2), found {len(changes)}",
            changes=changes,
        )
    lo, hi = BRACKET
    if not limit_mean_derivative_t(lo) < 0.0 < limit_mean_derivative_t(hi):
        raise BracketError(f"M'(inf,t) does not change sign on [{lo}, {hi}]")
    t_star = _bisect_derivative(lo, hi, tolerance)
    m_star = limit_mean_t(t_star)
    logger.info("t_star_found", t_star=t_star, m_star=m_star)
    return t_star, m_star


def relative_gain(m_star: float) -> float:
    """(M(inf,1) - m_star) / M(inf,1)."""
    m_one = limit_mean_t(1.0)
    return (m_one - m_star) / m_one


def m3_on_int2to3(t: float) -> float:
    """M(3,t) when M(2,t) = 1."""
    return (9.0 + 3.0 * t**2 - t**3) / (3.0 * t * (3.0 - t))


def segment_bounds_2_3(t: float) -> SegmentBounds:
    """Closed-form bounds on [2,3) compared with the recurrence.

    ``upper`` and ``lower`` bracket M(inf,t) and ``dprime_lower`` is the
    derivative bound; the flags record whether each holds at t.

    Raises:
        DomainError: If t is outside [2,3)
    """
    if not 2.0 <= t < 3.0:
        raise DomainError(f"segment bounds need 2 <= t < 3, got t={t}", t=t)
    segment = SegmentSpec.int2to3()
    m_inf, m_prime = _limit_pair(t, default_nu_t(t), segment)

    e_t = math.exp(t)
    upper = 2.0 * e_t / (t * (t + 2.0)) + t / (t + 2.0)
    lower = (
        1.0
        + 0.5 * t**2 * math.exp(-t)
        + m3_on_int2to3(t) * math.exp(-t) * (e_t - t**2 / 2.0 - t - 1.0)
    ) / -math.expm1(-t)
    dprime_lower = (
        2.0 * e_t / (t * (t + 2.0))
        - 2.0 * e_t * (2.0 * e_t + t**2) / (t**2 * (t + 2.0) ** 2)
        + 2.0 * (e_t - t - 1.0) * (9.0 + 3.0 * t**2 - t**3) / (3.0 * t * (t + 2.0) * (3.0 - t))
    )
    bounds = SegmentBounds(
        t=t,
        upper=upper,
        lower=lower,
        dprime_lower=dprime_lower,
        m_inf_t=m_inf,
        m_prime_t=m_prime,
        lower_ok=lower <= m_inf,
        upper_ok=m_inf <= upper,
        derivative_ok=m_prime >= dprime_lower,
    )
    if not (bounds.lower_ok and bounds.upper_ok and bounds.derivative_ok):
        logger.info(
            "segment_bound_not_met",
            t=t,
            lower_ok=bounds.lower_ok,
            upper_ok=bounds.upper_ok,
            derivative_ok=bounds.derivative_ok,
        )
    return bounds


def _grid(segment: SegmentSpec, step: float) -> list[float]:
    margin = get_settings().numerics.guard_margin
    count = math.ceil((segment.hi - segment.lo) / step)
    points = (segment.lo + i * step for i in range(count + 1))
    return [round(t, 12) for t in points if segment.contains(round(t, 12), margin)]


def scan_segment(
    segment: SegmentSpec, step: float, nu: int | None = None
) -> ParamScan:
    """Sample M(inf,t) and M'(inf,t) on a uniform grid inside a segment.

    Failed grid points are reported in ``gaps``. On (0,2) the scan checks
    strict convexity and locates the minimum; elsewhere it checks that the
    samples increase.
    """
    if step <= 0.0:
        raise DomainError(f"step must be > 0, got {step}", step=step)
    grid = _grid(segment, step)

    def evaluate(t: float) -> ScanSample | float:
        try:
            m_inf, m_prime = _limit_pair(t, *_resolve(t, nu, segment))
        except RingAnalyzerError as e:
            logger.warning("scan_point_failed", t=t, error=e.message)
            return t
        return ScanSample(t=t, m_inf_t=m_inf, m_prime_t=m_prime)

    threads = get_settings().simulation.threads
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(evaluate, grid))

    samples = tuple(r for r in results if isinstance(r, ScanSample))
    gaps = tuple(r for r in results if not isinstance(r, ScanSample))
    values = np.array([s.m_inf_t for s in samples])

    if segment.kind is SegmentKind.OPEN02:
        convexity_ok = (
            not gaps
            and values.size >= 3
            and bool(np.all(values[:-2] - 2.0 * values[1:-1] + values[2:] > 0.0))
        )
        return ParamScan(
            segment=segment,
            step=step,
            samples=samples,
            extremum=_extremum(samples),
            convexity_ok=convexity_ok,
            gaps=gaps,
        )
    return ParamScan(
        segment=segment,
        step=step,
        samples=samples,
        monotone_increasing=bool(np.all(np.diff(values) > 0.0)),
        gaps=gaps,
    )


def _extremum(samples: tuple[ScanSample, ...]) -> tuple[float, float] | None:
    """Refine the sampled sign change of M' into (t*, M(inf,t*))."""
    for left, right in zip(samples, samples[1:], strict=False):
        if left.m_prime_t < 0.0 <= right.m_prime_t:
            t_star = _bisect_derivative(left.t, right.t, 1e-10)
            return t_star, limit_mean_t(t_star)
    return None
