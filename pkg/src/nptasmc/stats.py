"""Sequential tests and estimation over Bernoulli outcome streams.

All sequential procedures accumulate a log-likelihood ratio ``log L1/L0``
and stop at Wald's boundaries ``log(beta/(1-alpha))`` (accept H0) and
``log((1-beta)/alpha)`` (accept H1).  Sources are any iterables of bools or
objects with a ``satisfied`` attribute; pair sources yield 2-tuples of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

MAX_SAMPLES = 10**7

H0, H1, UNDECIDED = "H0", "H1", "undecided"
PROCESS1, PROCESS2, INDIFFERENT = "process1-superior", "process2-superior", "indifferent"


class SourceExhausted(Exception):
    pass


def _bit(x) -> int:
    return int(x.satisfied) if hasattr(x, "satisfied") else int(bool(x))


def wald_bounds(alpha: float, beta: float) -> tuple[float, float]:
    return math.log(beta / (1 - alpha)), math.log((1 - beta) / alpha)


def _check_error_bounds(alpha, beta):
    if not (0 < alpha < 1 and 0 < beta < 1):
        raise ValueError("alpha and beta must lie in (0,1)")


# --------------------------------------------------------------------------
# hypothesis testing


@dataclass(frozen=True)
class SprtParams:
    """H0: p >= theta + delta0 against H1: p <= theta - delta1."""

    theta: float
    delta0: float = 0.01
    delta1: float = 0.01
    alpha: float = 0.05
    beta: float = 0.05

    def __post_init__(self):
        _check_error_bounds(self.alpha, self.beta)
        if not 0 < self.p1 < self.p0 < 1:
            raise ValueError(f"need 0 < p1 < p0 < 1, got p1={self.p1}, p0={self.p0}")

    @property
    def p0(self) -> float:
        return self.theta + self.delta0

    @property
    def p1(self) -> float:
        return self.theta - self.delta1

    @property
    def success_step(self) -> float:
        return math.log(self.p1 / self.p0)

    @property
    def failure_step(self) -> float:
        return math.log((1 - self.p1) / (1 - self.p0))

    @property
    def bounds(self) -> tuple[float, float]:
        return wald_bounds(self.alpha, self.beta)


@dataclass(frozen=True)
class Verdict:
    decision: str  # H0 | H1 | undecided
    samples: int
    successes: int
    llr: float


def sprt(source: Iterable, params: SprtParams, max_samples: int = MAX_SAMPLES) -> Verdict:
    """Wald's test; H0 means "probability at least p0"."""
    lo, hi = params.bounds
    up, down = params.success_step, params.failure_step
    r = 0.0
    n = s = 0
    it = iter(source)
    while n < max_samples:
        try:
            x = _bit(next(it))
        except StopIteration:
            raise SourceExhausted(f"source ended after {n} samples without a decision") from None
        n += 1
        s += x
        r += up if x else down
        if r <= lo:
            return Verdict(H0, n, s, r)
        if r >= hi:
            return Verdict(H1, n, s, r)
    return Verdict(UNDECIDED, n, s, r)


# --------------------------------------------------------------------------
# estimation


@dataclass(frozen=True)
class EstimateParams:
    delta: float = 0.05
    epsilon: float = 0.05

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0,1]")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0,1)")


def required_samples(params: EstimateParams) -> int:
    """Chernoff-Hoeffding sample size ``ceil(4 ln(1/delta) / epsilon^2)``."""
    return math.ceil(4 * math.log(1 / params.delta) / params.epsilon**2)


@dataclass(frozen=True)
class EstimateResult:
    p_hat: float | None
    samples: int
    successes: int
    epsilon: float
    delta: float

    @property
    def interval(self) -> tuple[float, float]:
        if self.p_hat is None:
            return (0.0, 1.0)
        return (self.p_hat - self.epsilon, self.p_hat + self.epsilon)


def estimate(source: Iterable, params: EstimateParams) -> EstimateResult:
    n = required_samples(params)
    it = iter(source)
    s = 0
    for k in range(n):
        try:
            s += _bit(next(it))
        except StopIteration:
            raise SourceExhausted(f"source ended after {k} of {n} samples") from None
    return EstimateResult(s / n if n else None, n, s, params.epsilon, params.delta)


# --------------------------------------------------------------------------
# comparison


@dataclass(frozen=True)
class CompareParams:
    """Indifference thresholds ``u0 < u1`` on the odds ratio u = k2/k1.

    ``p0eq`` and ``p1eq`` parametrise the precheck on P(x1 == x2).
    """

    u0: float = 0.5
    u1: float = 2.0
    alpha: float = 0.05
    beta: float = 0.05
    p0eq: float = 0.99
    p1eq: float = 0.95

    def __post_init__(self):
        _check_error_bounds(self.alpha, self.beta)
        if not 0 < self.u0 < self.u1:
            raise ValueError(f"need 0 < u0 < u1, got u0={self.u0}, u1={self.u1}")
        if not 0 < self.p1eq < self.p0eq < 1:
            raise ValueError("need 0 < p1eq < p0eq < 1")

    @property
    def w0(self) -> float:
        return self.u0 / (1 + self.u0)

    @property
    def w1(self) -> float:
        return self.u1 / (1 + self.u1)

    @property
    def _scale(self) -> float:
        return math.log(self.u1) - math.log(self.u0)

    @property
    def a(self) -> float:
        return math.log(self.beta / (1 - self.alpha)) / self._scale

    @property
    def r(self) -> float:
        return math.log((1 - self.beta) / self.alpha) / self._scale

    @property
    def c(self) -> float:
        return math.log((1 + self.u1) / (1 + self.u0)) / self._scale

    def constants(self) -> dict:
        return {"a": self.a, "r": self.r, "c": self.c, "w0": self.w0, "w1": self.w1}


def count_form(t: int, n: int, params: CompareParams) -> str | None:
    """Decision of the linear-boundary form after ``n`` informative pairs with ``t`` (0,1) wins."""
    if t >= params.r + n * params.c:
        return PROCESS2
    if t <= params.a + n * params.c:
        return PROCESS1
    return None


class CompareState:
    """Decision state of the two-phase comparison for one bound."""

    __slots__ = ("precheck", "q", "llr", "informative", "wins", "total", "result",
                 "_lo", "_hi", "_eq", "_neq", "_win", "_loss")

    def __init__(self, params: CompareParams):
        self._lo, self._hi = wald_bounds(params.alpha, params.beta)
        self._eq = math.log(params.p1eq / params.p0eq)
        self._neq = math.log((1 - params.p1eq) / (1 - params.p0eq))
        self._win = math.log(params.w1 / params.w0)
        self._loss = math.log((1 - params.w1) / (1 - params.w0))
        self.precheck = True
        self.q = 0.0
        self.llr = 0.0
        self.informative = 0
        self.wins = 0
        self.total = 0
        self.result: str | None = None

    def update(self, y1: int, y2: int) -> str | None:
        self.total += 1
        if self.precheck:
            self.q += self._eq if y1 == y2 else self._neq
            if self.q <= self._lo:
                self.result = INDIFFERENT
                return self.result
            if self.q >= self._hi:
                self.precheck = False
        if y1 != y2:
            self.informative += 1
            if y2:
                self.wins += 1
                self.llr += self._win
            else:
                self.llr += self._loss
            if self.llr >= self._hi:
                self.result = PROCESS2
            elif self.llr <= self._lo:
                self.result = PROCESS1
        return self.result


@dataclass(frozen=True)
class CompareVerdict:
    value: str  # process1-superior | process2-superior | indifferent | undecided
    informative: int
    total: int
    wins: int = 0


def compare(source: Iterable, params: CompareParams, max_samples: int = MAX_SAMPLES) -> CompareVerdict:
    """Which of two properties is more likely, from pairs of independent outcomes."""
    st = CompareState(params)
    it = iter(source)
    while st.total < max_samples:
        try:
            x1, x2 = next(it)
        except StopIteration:
            break
        if st.update(_bit(x1), _bit(x2)) is not None:
            break
    return CompareVerdict(st.result or UNDECIDED, st.informative, st.total, st.wins)


RESULT_CODE = {PROCESS2: 1.0, INDIFFERENT: 0.5, PROCESS1: 0.0}


@dataclass(frozen=True)
class ParamCompareResult:
    bounds: tuple[float, ...]
    verdicts: tuple[str, ...]
    pairs: int
    informative: tuple[int, ...] = field(default=())

    @property
    def results(self) -> tuple[float | None, ...]:
        """1 = process 2 accepted, 0 = rejected, 0.5 = indifferent, None = undecided."""
        return tuple(RESULT_CODE.get(v) for v in self.verdicts)


def _hit(x):
    """(satisfied, hit cost) from an outcome or a bare (bool, cost) pair."""
    if hasattr(x, "satisfied"):
        return x.satisfied, x.hit_cost
    return bool(x[0]), x[1]


def compare_param(source: Iterable, c: float, n_bounds: int, params: CompareParams,
                  max_samples: int = MAX_SAMPLES) -> ParamCompareResult:
    """Compare at every bound ``i*c/N`` reusing each pair of runs for all bounds."""
    if n_bounds < 1:
        raise ValueError("need at least one bound")
    bounds = tuple(i * c / n_bounds for i in range(1, n_bounds + 1))
    states = [CompareState(params) for _ in bounds]
    open_ = list(range(n_bounds))
    pairs = 0
    it = iter(source)
    while open_ and pairs < max_samples:
        try:
            o1, o2 = next(it)
        except StopIteration:
            break
        pairs += 1
        s1, h1 = _hit(o1)
        s2, h2 = _hit(o2)
        still = []
        for i in open_:
            b = bounds[i]
            y1 = int(s1 and h1 <= b)
            y2 = int(s2 and h2 <= b)
            if states[i].update(y1, y2) is None:
                still.append(i)
        open_ = still
    return ParamCompareResult(bounds, tuple(s.result or UNDECIDED for s in states), pairs,
                              tuple(s.informative for s in states))
