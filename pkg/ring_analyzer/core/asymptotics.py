"""Large-ring constants of the election at t = 1.

The limit quantities are Poisson(1)-weighted sums over the exact finite-k
values; each is truncated at nu and reported with a bound on what the
truncation dropped.
"""

import math

import numpy as np
import structlog
from scipy.special import gammainc, xlog1py
from scipy.stats import poisson

from ring_analyzer.config import get_settings
from ring_analyzer.core.errors import DomainError, FitError
from ring_analyzer.core.exact_engine import binomial_row, default_engine, moment_table
from ring_analyzer.models.limits import AsymConstants, BoundSequence, LimitReport

logger = structlog.get_logger(__name__)

E = math.e
E_INV = math.exp(-1.0)
# 1 - e^-1, the probability that a large ring produces at least one candidate
ONE_MINUS_E_INV = -math.expm1(-1.0)


def _default_nu(nu: int | None) -> int:
    return get_settings().numerics.default_nu if nu is None else nu


def _check_nu(nu: int, minimum: int = 2) -> None:
    if nu < minimum:
        raise DomainError(f"truncation nu must be >= {minimum}, got nu={nu}", nu=nu)


def poisson_weights(nu: int, t: float = 1.0) -> np.ndarray:
    """e^{-t} t^k / k! for k = 0..nu."""
    return np.asarray(poisson.pmf(np.arange(nu + 1), t), dtype=np.float64)


def factorial_tail(nu: int) -> float:
    """Sum of 1/k! over k > nu.

    gammainc(nu+1, 1) is P(Poisson(1) > nu) = e^-1 * sum_{k>nu} 1/k!.
    """
    return float(E * gammainc(nu + 1, 1.0))


def truncation_bound(nu: int) -> float:
    """Bound on the error of the nu-term limit mean."""
    return factorial_tail(nu) / ONE_MINUS_E_INV


def limit_mean(nu: int | None = None) -> LimitReport:
    """M(inf) = (1 + sum_{k=2}^{nu} e^-1/k! M(k)) / (1 - e^-1).

    Args:
        nu: Truncation (default from settings)

    Returns:
        LimitReport with m_inf, s1 and tail_bound
    """
    nu = _default_nu(nu)
    _check_nu(nu)
    table = moment_table(nu, 1.0)
    weights = poisson_weights(nu)
    s1 = float(np.dot(weights[2:], table.m[2 : nu + 1]))
    m_inf = (1.0 + s1) / ONE_MINUS_E_INV
    return LimitReport(
        truncation_nu=nu, tail_bound=truncation_bound(nu), m_inf=m_inf, s1=s1
    )


def limit_second_moment(nu: int | None = None) -> LimitReport:
    """Second moment and variance of the limit round count.

    The neglected M2(k), k > nu, are bounded by 2 M2(nu) in ``tail_bound``.
    """
    nu = _default_nu(nu)
    _check_nu(nu)
    mean_report = limit_mean(nu)
    assert mean_report.m_inf is not None and mean_report.s1 is not None
    table = moment_table(nu, 1.0)
    weights = poisson_weights(nu)
    s2 = float(np.dot(weights[2:], table.m2[2 : nu + 1]))
    m_inf, s1 = mean_report.m_inf, mean_report.s1

    m2_inf = (-1.0 + 2.0 * m_inf + s2) / ONE_MINUS_E_INV
    var_inf = (E_INV + ONE_MINUS_E_INV * s2 - s1 * s1) / ONE_MINUS_E_INV**2
    envelope = 2.0 * table.second_moment(nu) + 2.0 * E
    return LimitReport(
        truncation_nu=nu,
        tail_bound=envelope * E_INV * factorial_tail(nu) / ONE_MINUS_E_INV,
        m_inf=m_inf,
        m2_inf=m2_inf,
        var_inf=max(var_inf, 0.0),
        s1=s1,
        s2=s2,
    )


def limit_mgf(alpha: float, nu: int | None = None) -> float:
    """E[exp(-alpha X(inf))] from the nu-term Poisson sum."""
    nu = _default_nu(nu)
    _check_nu(nu)
    if alpha < 0.0:
        raise DomainError(f"alpha must be >= 0, got alpha={alpha}", alpha=alpha)
    weights = poisson_weights(nu)
    phi = default_engine().mgf_table(nu, alpha, 1.0)
    inner = E_INV + float(np.dot(weights[2:], phi[2 : nu + 1]))
    return math.exp(-alpha) / (-math.expm1(-(alpha + 1.0))) * inner


def _c1_coefficients(nu: int) -> np.ndarray:
    """Weights of M(k) in C1 for k = 0..nu (zero below k = 2)."""
    k = np.arange(nu + 1, dtype=np.float64)
    coef = (-(k**2) + E_INV * k**2 + 3 * k - 3 * E_INV * k - 1.0) * poisson_weights(nu)
    coef /= 2.0 * ONE_MINUS_E_INV**2
    coef[:2] = 0.0
    return coef


def correction_c1(nu: int | None = None) -> float:
    """Coefficient C1 of the 1/n term of M(n,1) - M(inf).

    Obtained by matching the 1/n terms of the recurrence with the Stirling
    expansion b(n,k) ~ e^-1/k! (1 - (k^2 - 3k + 1)/(2n)).
    """
    nu = _default_nu(nu)
    _check_nu(nu, minimum=3)
    table = moment_table(nu, 1.0)
    inner = float(np.dot(_c1_coefficients(nu), table.m[: nu + 1]))
    return -E_INV / (2.0 * ONE_MINUS_E_INV**2) + inner


def c1_tail_bound(nu: int) -> float:
    """Bound on |C1(nu) - C1| using M(k) < e."""
    k = np.arange(nu + 1, nu + 80, dtype=np.float64)
    terms = (k**2 + 3 * k + 1) * poisson.pmf(k, 1.0) * E
    return float(np.sum(terms)) / (2.0 * ONE_MINUS_E_INV**2)


def c2_fit_with_spread(
    n_lo: int, n_hi: int, nu: int | None = None
) -> tuple[float, float]:
    """Least-squares constant for n^2 (M(n) - M(inf) - C1/n) over [n_lo, n_hi].

    Returns:
        (fitted constant, max relative deviation of the samples from it)
    """
    if not 2 < n_lo < n_hi:
        raise DomainError(
            f"fit range needs 2 < n_lo < n_hi, got ({n_lo}, {n_hi})",
            n_lo=n_lo,
            n_hi=n_hi,
        )
    if n_hi > 10_000:
        raise DomainError(f"fit range limited to n_hi <= 10000, got {n_hi}", n_hi=n_hi)
    report = limit_mean(nu)
    assert report.m_inf is not None
    c1 = correction_c1(nu)
    table = moment_table(n_hi, 1.0)
    n = np.arange(n_lo, n_hi + 1, dtype=np.float64)
    scaled = n**2 * (table.m[n_lo : n_hi + 1] - report.m_inf - c1 / n)
    value = float(np.mean(scaled))
    spread = float(np.max(np.abs(scaled - value)) / abs(value))
    return value, spread


def correction_c2_fit(
    n_lo: int,
    n_hi: int,
    nu: int | None = None,
    max_relative_spread: float = 0.1,
) -> float:
    """Fitted coefficient C2 of the 1/n^2 term.

    Raises:
        DomainError: If the range is invalid
        FitError: If the samples deviate from the constant by more than
            ``max_relative_spread`` of its value
    """
    value, spread = c2_fit_with_spread(n_lo, n_hi, nu)
    if spread > max_relative_spread:
        raise FitError(
            f"C2 fit over [{n_lo}, {n_hi}] is not constant: spread {spread:.3g} "
            f"exceeds {max_relative_spread:.3g}",
            n_lo=n_lo,
            n_hi=n_hi,
            value=value,
            spread=spread,
        )
    logger.debug("c2_fitted", n_lo=n_lo, n_hi=n_hi, value=value, spread=spread)
    return value


def asym_constants() -> AsymConstants:
    """Constants of the Delta(n) expansion, all closed forms in e."""
    c0 = (E - 2.0) / (E - 1.0)
    c1 = 0.5 * E / (E - 1.0)
    c2 = -0.5 * (E - 2.0) / (E - 1.0) ** 2
    c3 = E * (7.0 * E - 13.0) / (24.0 * (E - 1.0) ** 2)
    c4 = (-7.0 * E**2 + 25.0 * E - 24.0) / (24.0 * (E - 1.0) ** 2)
    c6 = 1.0 / (1.0 - c0)
    c7 = c0 / (1.0 - c0) ** 2
    c5 = c1 * c2 * c6 + c3
    c8 = c1 * c7 + c5 * c6
    return AsymConstants(c0=c0, c1=c1, c2=c2, c3=c3, c4=c4, c5=c5, c6=c6, c7=c7, c8=c8)


def bound_sequence(n_max: int) -> list[BoundSequence]:
    """Upper bounds B(n) >= M(n,1) and their gaps Delta(n) = e - B(n).

    Delta is iterated directly, Delta(n) = a(n) Delta(n-1) + b(n)/n, which
    is a contraction and keeps the small gaps accurate for large n.
    """
    if n_max < 2:
        raise DomainError(f"n_max must be >= 2, got {n_max}", n_max=n_max)
    constants = asym_constants()
    lead, second = constants.c1 * constants.c6, constants.c8

    sequence = [
        BoundSequence(
            n=1, b_n=0.0, delta_n=E, a_n=0.0, bcoef_n=0.0, delta_estimate=lead + second
        )
    ]
    delta = E
    for n in range(2, n_max + 1):
        t_prev = float(np.exp(xlog1py(n - 1, -1.0 / n)))
        denominator = float(-np.expm1(xlog1py(n, -1.0 / n)) - math.exp(-n * math.log(n)))
        a_n = 1.0 - t_prev / denominator
        bcoef_n = n * (E * t_prev - 1.0) / denominator
        delta = a_n * delta + bcoef_n / n
        sequence.append(
            BoundSequence(
                n=n,
                b_n=E - delta,
                delta_n=delta,
                a_n=a_n,
                bcoef_n=bcoef_n,
                delta_estimate=lead / n + second / n**2,
            )
        )
    return sequence


def laplace_tail(n: int, r: int) -> float:
    """Saddle-point estimate of sum_{k>=r} b(n,k) for large n.

    Diagnostic only: used to choose truncation points, never to alter
    results.
    """
    if r < 2:
        raise DomainError(f"r must be >= 2, got r={r}", r=r)
    if r > n:
        raise DomainError(f"r must be <= n, got r={r}, n={n}", r=r, n=n)
    log_value = (
        -1.0
        + r
        - (r + 0.5) * math.log(r)
        - 0.5 * math.log(2.0 * math.pi)
        - math.log1p(-1.0 / r)
    )
    return math.exp(log_value)


def exact_tail(n: int, r: int, t: float = 1.0) -> float:
    """sum_{k>=r} b(n,k;t) from the exact row."""
    row = binomial_row(n, t)
    return float(np.sum(row[r:]))
