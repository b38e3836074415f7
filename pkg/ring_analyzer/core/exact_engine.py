"""Exact finite-n evaluation of the round-count recurrences.

Every quantity is solved bottom-up over the active count k = 1..n. The
self-referential outcomes of a round (no candidate, or every processor a
candidate) leave the active count unchanged; their terms are moved to the
left side, which is where the normalizer lambda(n,t) comes from.
"""

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import NDArray
from pydantic import ValidationError
from scipy.special import betaln, xlog1py, xlogy

from ring_analyzer.config import NumericsSettings, get_settings
from ring_analyzer.core.errors import DomainError, SingularityError
from ring_analyzer.models.moments import (
    BinomialWeight,
    CandidacyParam,
    MgfValue,
    Normalizer,
    RoundMoments,
)
from ring_analyzer.models.segments import ceil_lg

logger = structlog.get_logger(__name__)

FloatArray = NDArray[np.float64]

# Rows are kept whole up to this size; larger rows stop where t^k/k! < e^-700
FULL_ROW_LIMIT = 2048
ROW_TAIL_PAD = 400


def as_candidacy(t: float | CandidacyParam) -> CandidacyParam:
    """Coerce a raw t into a validated CandidacyParam.

    Raises:
        DomainError: If t is negative or not finite
    """
    if isinstance(t, CandidacyParam):
        return t
    try:
        return CandidacyParam(t=float(t))
    except ValidationError as e:
        raise DomainError(f"t must be a finite real >= 0, got t={t}", t=t) from e


def row_length(n: int, t: float) -> int:
    """Last candidate count K kept in the row of n."""
    if n <= FULL_ROW_LIMIT:
        return n
    return min(n, int(4 * t) + ROW_TAIL_PAD)


def binomial_row(n: int, t: float | CandidacyParam) -> FloatArray:
    """Weights b(n,k;t) for k = 0..K (see ``row_length``).

    The coefficient C(n,k)(t/n)^k is accumulated as a running sum of logs,
    which stays accurate for n up to 10^6 and beyond.

    Raises:
        DomainError: If t/n > 1
    """
    param = as_candidacy(t)
    p = param.probability(n)
    K = row_length(n, param.t)
    j = np.arange(1, K + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        steps = np.log(param.t * (1.0 - (j - 1.0) / n) / j)
        log_coef = np.concatenate(([0.0], np.cumsum(steps)))
        log_row = log_coef + xlog1py(n - np.arange(K + 1, dtype=np.float64), -p)
    row = np.exp(log_row)
    row.setflags(write=False)
    return row


def binomial_weight(n: int, k: int, t: float | CandidacyParam) -> BinomialWeight:
    """Probability that exactly k of n active processors become candidates.

    Args:
        n: Active processors
        k: Candidates
        t: Candidacy parameter (each processor volunteers with t/n)

    Returns:
        b(n,k;t) evaluated in log space

    Raises:
        DomainError: If k is outside 0..n or t/n > 1
    """
    param = as_candidacy(t)
    if not 0 <= k <= n:
        raise DomainError(f"k must be in 0..n, got k={k}, n={n}", n=n, k=k)
    p = param.probability(n)
    log_coef = -betaln(1 + n - k, 1 + k) - math.log(n + 1)
    log_value = log_coef + xlogy(k, p) + xlog1py(n - k, -p)
    value = min(1.0, float(np.exp(log_value)))
    return BinomialWeight(n=n, k=k, t=param.t, value=value)


def _self_mass(n: int, p: float) -> tuple[float, float]:
    """(1-p)^n and p^n, the two outcomes that leave n unchanged."""
    return float(np.exp(xlog1py(n, -p))), float(np.exp(xlogy(n, p)))


def _denominator(n: int, p: float) -> float:
    """1 - (1-p)^n - p^n without cancellation in the first term."""
    return float(-np.expm1(xlog1py(n, -p)) - np.exp(xlogy(n, p)))


def normalizer(
    n: int, t: float | CandidacyParam, floor: float | None = None
) -> Normalizer:
    """lambda(n,t) = 1/(1 - (1-t/n)^n - (t/n)^n).

    Raises:
        DomainError: If n < 2 or t/n > 1
        SingularityError: If the denominator is below ``floor``
    """
    param = as_candidacy(t)
    if n < 2:
        raise DomainError(f"normalizer needs n >= 2, got n={n}", n=n)
    p = param.probability(n)
    floor = get_settings().numerics.singular_floor if floor is None else floor
    denominator = _denominator(n, p)
    if denominator <= floor:
        raise SingularityError(
            f"normalizer denominator vanishes at n={n}, t={param.t}",
            n=n,
            t=param.t,
            denominator=denominator,
        )
    return Normalizer(n=n, t=param.t, value=1.0 / denominator)


def normalizer_bounds(n: int, t: float) -> tuple[float, float]:
    """Lower and upper bound bracketing lambda(n,t).

    Uses e^{-t}(1 - t^2/n) <= (1-t/n)^n <= e^{-t}. The upper bound is
    ``inf`` when its denominator is not positive.
    """
    if n < 2 or not 0.0 < t < n:
        raise DomainError(f"bounds need n >= 2 and 0 < t < n, got n={n}, t={t}")
    power = (t / n) ** n
    lower = 1.0 / (1.0 - math.exp(-t) * (1.0 - t * t / n) - power)
    upper_den = -math.expm1(-t) - power
    upper = 1.0 / upper_den if upper_den > 0.0 else math.inf
    return lower, upper


@dataclass(frozen=True)
class MomentTable:
    """Read-only tables M(k), M2(k), M'(k) for k = 0..size at fixed t.

    Index 0 is unused. ``convention_xi`` marks the counts k <= xi that take
    the deterministic value ceil(lg k).
    """

    t: float
    convention_xi: int | None
    size: int
    m: FloatArray
    m2: FloatArray
    dm: FloatArray

    def mean(self, k: int) -> float:
        """M(k,t)."""
        return float(self.m[k])

    def second_moment(self, k: int) -> float:
        """M2(k,t)."""
        return float(self.m2[k])

    def derivative(self, k: int) -> float:
        """dM(k,t)/dt."""
        return float(self.dm[k])


def _check_reachable(t: float, convention_xi: int | None) -> None:
    """t/k <= 1 must hold for every count solved by the recurrence."""
    smallest = 2 if convention_xi is None else convention_xi + 1
    if t > smallest:
        raise DomainError(
            f"t={t} exceeds the smallest recurrence count k={smallest} (t/k > 1); "
            "declare a segment convention",
            t=t,
            convention_xi=convention_xi,
        )


class ExactEngine:
    """Memoizing evaluator of the finite-n recurrences.

    One table per (t, convention) is kept and grown on demand, up to
    ``table_cache_size`` tables in least-recently-used order. Published
    tables are never mutated.
    """

    def __init__(self, numerics: NumericsSettings | None = None) -> None:
        """Initialize engine.

        Args:
            numerics: Tolerances (default: application settings)
        """
        self.numerics = numerics or get_settings().numerics
        self._tables: OrderedDict[tuple[float, int | None], MomentTable] = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._tables)

    def clear(self) -> None:
        """Drop every cached table."""
        with self._lock:
            self._tables.clear()

    def _lookup(self, key: tuple[float, int | None], n: int) -> MomentTable | None:
        # caller holds the lock
        cached = self._tables.get(key)
        if cached is not None:
            self._tables.move_to_end(key)
            if cached.size >= n:
                return cached
        return None

    def _store(self, key: tuple[float, int | None], table: MomentTable) -> None:
        # caller holds the lock
        self._tables[key] = table
        self._tables.move_to_end(key)
        while len(self._tables) > self.numerics.table_cache_size:
            evicted, _ = self._tables.popitem(last=False)
            logger.debug("memo_table_evicted", t=evicted[0], convention_xi=evicted[1])

    def table(
        self, n: int, t: float | CandidacyParam, convention_xi: int | None = None
    ) -> MomentTable:
        """Moment table covering k = 1..n.

        Raises:
            DomainError: If t is not reachable without a convention
            SingularityError: If a normalizer vanishes on the way to n
        """
        param = as_candidacy(t)
        key = (param.t, convention_xi)
        if n >= 2 and (convention_xi is None or n > convention_xi):
            _check_reachable(param.t, convention_xi)
        with self._lock:
            found = self._lookup(key, n)
            if found is not None:
                return found
            cached = self._tables.get(key)
            size = n if cached is None else max(n, 2 * cached.size)
            table = self._build(param.t, convention_xi, size, cached)
            self._store(key, table)
        logger.debug(
            "memo_table_extended",
            t=param.t,
            convention_xi=convention_xi,
            size=size,
        )
        return table

    def _build(
        self,
        t: float,
        convention_xi: int | None,
        size: int,
        previous: MomentTable | None,
    ) -> MomentTable:
        m = np.zeros(size + 1)
        m2 = np.zeros(size + 1)
        dm = np.zeros(size + 1)
        start = 2
        if previous is not None:
            m[: previous.size + 1] = previous.m
            m2[: previous.size + 1] = previous.m2
            dm[: previous.size + 1] = previous.dm
            start = previous.size + 1

        for n in range(start, size + 1):
            if convention_xi is not None and n <= convention_xi:
                rounds = float(ceil_lg(n))
                m[n], m2[n], dm[n] = rounds, rounds * rounds, 0.0
                continue

            p = t / n
            denominator = _denominator(n, p)
            if denominator <= self.numerics.singular_floor:
                raise SingularityError(
                    f"normalizer denominator vanishes at n={n}, t={t}",
                    n=n,
                    t=t,
                    denominator=denominator,
                )
            row = binomial_row(n, t)
            q0, bn = _self_mass(n, p)
            top = min(n - 1, row.size - 1)
            w = row[2 : top + 1]
            inner_m = float(np.dot(w, m[2 : top + 1]))
            inner_m2 = float(np.dot(w, m2[2 : top + 1]))

            m[n] = (1.0 + inner_m) / denominator
            m2[n] = (
                1.0 + 2.0 * (q0 + bn) * m[n] + 2.0 * inner_m + inner_m2
            ) / denominator

            # d b(n,k;t)/dt = b(n,k;t) n (k - t) / (t (n - t))
            scale = n / (t * (n - t))
            ks = np.arange(2, top + 1, dtype=np.float64)
            dw = w * (ks - t) * scale
            d_self = (bn * (n - t) - q0 * t) * scale
            dm[n] = (
                d_self * m[n]
                + float(np.dot(dw, m[2 : top + 1]))
                + float(np.dot(w, dm[2 : top + 1]))
            ) / denominator

        for array in (m, m2, dm):
            array.setflags(write=False)
        return MomentTable(
            t=t, convention_xi=convention_xi, size=size, m=m, m2=m2, dm=dm
        )

    def mgf_table(
        self,
        n: int,
        alpha: float,
        t: float | CandidacyParam,
        convention_xi: int | None = None,
    ) -> FloatArray:
        """phi(k) = E[exp(-alpha X(k))] for k = 0..n (index 0 unused)."""
        param = as_candidacy(t)
        if alpha < 0.0 or not math.isfinite(alpha):
            raise DomainError(f"alpha must be >= 0, got alpha={alpha}", alpha=alpha)
        if n >= 2 and (convention_xi is None or n > convention_xi):
            _check_reachable(param.t, convention_xi)
        decay = math.exp(-alpha)
        phi = np.ones(n + 1)
        for k in range(2, n + 1):
            if convention_xi is not None and k <= convention_xi:
                phi[k] = math.exp(-alpha * ceil_lg(k))
                continue
            p = param.t / k
            row = binomial_row(k, param.t)
            q0, bk = _self_mass(k, p)
            left = 1.0 - decay * (q0 + bk)
            if left <= self.numerics.singular_floor:
                raise SingularityError(
                    f"mgf pivot vanishes at n={k}, t={param.t}", n=k, t=param.t
                )
            top = min(k - 1, row.size - 1)
            inner = float(np.dot(row[2 : top + 1], phi[2 : top + 1]))
            phi[k] = min(1.0, decay * (row[1] + inner) / left)
        phi.setflags(write=False)
        return phi


_engine = ExactEngine()


def default_engine() -> ExactEngine:
    """Process-wide engine shared by every module."""
    return _engine


def moment_table(
    n: int, t: float | CandidacyParam, convention_xi: int | None = None
) -> MomentTable:
    """Shared memo table covering k = 1..n."""
    return _engine.table(n, t, convention_xi)


def mean_rounds(
    n: int, t: float | CandidacyParam, convention_xi: int | None = None
) -> RoundMoments:
    """Expected number of rounds M(n,t) to elect a leader among n processors.

    Args:
        n: Active processors
        t: Candidacy parameter
        convention_xi: Counts k <= xi take M(k,t) = ceil(lg k)

    Returns:
        RoundMoments with ``mean`` populated

    Raises:
        DomainError: If n < 1 or t is not reachable
        SingularityError: If a normalizer vanishes
    """
    param = as_candidacy(t)
    if n < 1:
        raise DomainError(f"n must be >= 1, got n={n}", n=n)
    if n == 1:
        return RoundMoments(n=1, t=param.t, mean=0.0, convention_xi=convention_xi)
    table = _engine.table(n, param, convention_xi)
    return RoundMoments(
        n=n, t=param.t, mean=table.mean(n), convention_xi=convention_xi
    )


def second_moment_rounds(
    n: int, t: float | CandidacyParam, convention_xi: int | None = None
) -> RoundMoments:
    """Mean, second moment and variance of the number of rounds.

    Raises:
        DomainError: If n < 1 or t is not reachable
        SingularityError: If a normalizer vanishes, or cancellation destroys
            the variance
    """
    param = as_candidacy(t)
    if n < 1:
        raise DomainError(f"n must be >= 1, got n={n}", n=n)
    if n == 1:
        return RoundMoments(
            n=1,
            t=param.t,
            mean=0.0,
            second_moment=0.0,
            variance=0.0,
            convention_xi=convention_xi,
        )
    table = _engine.table(n, param, convention_xi)
    mean = table.mean(n)
    second = table.second_moment(n)
    variance = second - mean * mean
    if variance < 0.0:
        clamp = _engine.numerics.variance_clamp
        if variance < -clamp * max(1.0, second):
            raise SingularityError(
                f"variance lost to cancellation at n={n}, t={param.t}",
                n=n,
                t=param.t,
                variance=variance,
            )
        logger.warning("variance_clamped", n=n, t=param.t, raw_variance=variance)
        variance = 0.0
    return RoundMoments(
        n=n,
        t=param.t,
        mean=mean,
        second_moment=second,
        variance=variance,
        convention_xi=convention_xi,
    )


def mean_rounds_derivative(
    n: int, t: float | CandidacyParam, convention_xi: int | None = None
) -> float:
    """dM(n,t)/dt from the differentiated recurrence, with M'(1,t) = 0."""
    param = as_candidacy(t)
    if n < 1:
        raise DomainError(f"n must be >= 1, got n={n}", n=n)
    if n == 1:
        return 0.0
    return _engine.table(n, param, convention_xi).derivative(n)


def mgf(
    n: int,
    alpha: float,
    t: float | CandidacyParam = 1.0,
    convention_xi: int | None = None,
) -> MgfValue:
    """Moment generating function phi(n) = E[exp(-alpha X(n))].

    Raises:
        DomainError: If alpha < 0 or n < 1
    """
    param = as_candidacy(t)
    if n < 1:
        raise DomainError(f"n must be >= 1, got n={n}", n=n)
    phi = _engine.mgf_table(n, alpha, param, convention_xi)
    return MgfValue(n=n, alpha=alpha, t=param.t, value=float(phi[n]))


def recurrence_residual(table: MomentTable) -> float:
    """Largest |M(n) - 1 - sum_k b(n,k) M(k)| over the table.

    The sum runs over every k including the self terms k = 0 and k = n, so
    this checks the tabulated values against the unnormalized recurrence.
    """
    worst = 0.0
    m = table.m
    for n in range(2, table.size + 1):
        if table.convention_xi is not None and n <= table.convention_xi:
            continue
        row = binomial_row(n, table.t)
        top = min(n, row.size - 1)
        expected = 1.0 + float(np.dot(row[2 : top + 1], m[2 : top + 1]))
        expected += row[0] * m[n]
        if top < n:
            expected += float(np.exp(xlogy(n, table.t / n))) * m[n]
        worst = max(worst, abs(m[n] - expected))
    return worst
