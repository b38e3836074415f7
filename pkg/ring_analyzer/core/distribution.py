"""Distribution of the number of rounds.

P(n,j) is propagated over j for every active count up to n; the survival
function P(X(n) > j) is carried along the same recurrence so that the tail
mass of a finite table is computed, not inferred from the row sum.
"""

import math
from functools import lru_cache

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy.stats import poisson

from ring_analyzer.config import get_settings
from ring_analyzer.core.errors import DomainError, SingularityError
from ring_analyzer.core.exact_engine import as_candidacy, binomial_row
from ring_analyzer.models.distribution import RoundDistribution, TailLaw
from ring_analyzer.models.moments import CandidacyParam

logger = structlog.get_logger(__name__)

UNDERFLOW = 1e-300
TWO_E_INV = 2.0 * math.exp(-1.0)


def _check_t(param: CandidacyParam) -> None:
    if not 0.0 < param.t <= 2.0:
        raise DomainError(
            f"round distributions need 0 < t <= 2 (t/2 <= 1), got t={param.t}",
            t=param.t,
        )


@lru_cache(maxsize=16)
def _propagate(n: int, t: float, j_max: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """P(k,j) and P(X(k) > j) for k = 0..n, j = 0..j_max."""
    # axis 1: 0 = point mass, 1 = survival
    table = np.zeros((n + 1, 2, j_max + 1))
    table[1, 0, 0] = 1.0
    table[2:, 1, 0] = 1.0
    for k in range(2, n + 1):
        row = binomial_row(k, t)
        p = t / k
        stay = row[0] + (row[k] if row.size > k else p**k)
        top = min(k - 1, row.size - 1)
        inner = np.tensordot(row[1 : top + 1], table[1 : top + 1, :, :j_max], axes=1)
        for j in range(1, j_max + 1):
            table[k, :, j] = stay * table[k, :, j - 1] + inner[:, j - 1]
    probs = table[:, 0, :]
    survival = table[:, 1, :]
    probs[probs < UNDERFLOW] = 0.0
    probs.setflags(write=False)
    survival.setflags(write=False)
    logger.debug("distribution_table_built", n=n, t=t, j_max=j_max)
    return probs, survival


def exact_distribution(
    n: int, j_max: int | None = None, t: float | CandidacyParam = 1.0
) -> RoundDistribution:
    """P(X(n) = j) for j = 1..j_max.

    Args:
        n: Active processors (>= 2)
        j_max: Table width (default from settings)
        t: Candidacy parameter

    Raises:
        DomainError: If n < 2, j_max < 1 or t/2 > 1
    """
    param = as_candidacy(t)
    j_max = get_settings().numerics.j_max if j_max is None else j_max
    if n < 2:
        raise DomainError(f"n must be >= 2, got n={n}", n=n)
    if j_max < 1:
        raise DomainError(f"j_max must be >= 1, got j_max={j_max}", j_max=j_max)
    _check_t(param)
    probs, survival = _propagate(n, param.t, j_max)
    tail = float(min(1.0, max(0.0, survival[n, j_max])))
    return RoundDistribution(
        n=n,
        t=param.t,
        j_max=j_max,
        probs=tuple(float(v) for v in probs[n, 1:]),
        tail_mass=tail,
    )


def limit_distribution(
    j_max: int | None = None, nu: int | None = None, t: float = 1.0
) -> RoundDistribution:
    """P(X(inf) = j) for j = 1..j_max.

    The number of candidates of a large ring is Poisson(t): P(inf,1) = t e^-t
    and P(inf,j) = e^-t P(inf,j-1) + sum_{k=2}^{nu} e^-t t^k/k! P(k,j-1).
    """
    settings = get_settings().numerics
    j_max = settings.j_max if j_max is None else j_max
    nu = settings.default_nu if nu is None else nu
    if j_max < 1 or nu < 2:
        raise DomainError(
            f"need j_max >= 1 and nu >= 2, got j_max={j_max}, nu={nu}",
            j_max=j_max,
            nu=nu,
        )
    param = as_candidacy(t)
    _check_t(param)
    probs, survival = _propagate(nu, param.t, j_max)
    weights = poisson.pmf(np.arange(nu + 1), param.t)

    limit = np.zeros(j_max + 1)
    limit_survival = np.ones(j_max + 1)
    # k = 1 enters through P(1,0) = 1
    drive = weights[1:] @ probs[1:, :j_max]
    drive_survival = weights[2:] @ survival[2:, :j_max]
    for j in range(1, j_max + 1):
        limit[j] = weights[0] * limit[j - 1] + drive[j - 1]
        limit_survival[j] = weights[0] * limit_survival[j - 1] + drive_survival[j - 1]
    limit[limit < UNDERFLOW] = 0.0
    return RoundDistribution(
        n=None,
        t=param.t,
        j_max=j_max,
        probs=tuple(float(v) for v in limit[1:]),
        tail_mass=float(min(1.0, max(0.0, limit_survival[j_max]))),
    )


def residues(k_max: int) -> list[float]:
    """Residues R(k) of the round generating functions at z = 2, at t = 1.

    Returns:
        [R(2), R(3), ..., R(k_max)]

    Raises:
        DomainError: If k_max < 2
        SingularityError: If a pivot 1 - 2(1-1/k)^k - 2k^-k vanishes
    """
    if k_max < 2:
        raise DomainError(f"k_max must be >= 2, got {k_max}", k_max=k_max)
    floor = get_settings().numerics.singular_floor
    r = np.zeros(k_max + 1)
    r[2] = 1.0
    for k in range(3, k_max + 1):
        row = binomial_row(k, 1.0)
        stay = row[0] + (row[k] if row.size > k else k ** (-k))
        pivot = 1.0 - 2.0 * stay
        if pivot <= floor:
            raise SingularityError(f"residue pivot vanishes at k={k}", k=k, pivot=pivot)
        top = min(k - 1, row.size - 1)
        r[k] = 2.0 * float(np.dot(row[2 : top + 1], r[2 : top + 1])) / pivot
    return [float(v) for v in r[2:]]


def tail_law(k_max: int = 15) -> TailLaw:
    """Geometric tail P(inf,j) ~ 2 rho/(1 - 2/e) 2^-j."""
    values = np.asarray(residues(k_max))
    rho = float(np.dot(poisson.pmf(np.arange(2, k_max + 1), 1.0), values))
    return TailLaw(rho=rho, coefficient=2.0 * rho / (1.0 - TWO_E_INV), k_max=k_max)


def moment_from_distribution(dist: RoundDistribution, power: int = 1) -> float:
    """sum_j j^power P(X = j) over the table (tail not included)."""
    j = np.arange(1, dist.j_max + 1, dtype=np.float64)
    return float(np.dot(j**power, np.asarray(dist.probs)))


def mgf_from_distribution(dist: RoundDistribution, alpha: float) -> float:
    """sum_j exp(-alpha j) P(X = j) over the table."""
    j = np.arange(1, dist.j_max + 1, dtype=np.float64)
    return float(np.dot(np.exp(-alpha * j), np.asarray(dist.probs)))
