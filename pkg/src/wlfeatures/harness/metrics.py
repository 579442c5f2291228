"""Coverage, agile score and Pearson correlation with Fisher intervals."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

DEFAULT_TIMEOUT = 60.0
Z95 = 1.96


class UndefinedCorrelation(ValueError):
    pass


def coverage(records: Iterable) -> dict:
    """Solved problems per config."""
    out: dict = defaultdict(int)
    for r in records:
        out[r.config] += 1 if r.solved else 0
    return dict(out)


def agile_value(seconds: Optional[float], solved: bool = True, timeout: float = DEFAULT_TIMEOUT) -> float:
    """1 within a second, 1 - ln t / ln T up to the timeout, 0 when unsolved or slower."""
    if timeout <= 1:
        raise ValueError("timeout must exceed one second")
    if not solved or seconds is None or seconds > timeout:
        return 0.0
    if seconds <= 1.0:
        return 1.0
    return 1.0 - math.log(seconds) / math.log(timeout)


def agile_score(records: Iterable, timeout: float = DEFAULT_TIMEOUT) -> dict:
    out: dict = defaultdict(float)
    for r in records:
        out[r.config] += agile_value(r.wall_seconds, r.solved, timeout)
    return dict(out)


# --------------------------------------------------------------------------
# Student t tail via the regularised incomplete beta function


def _betacf(a: float, b: float, x: float, max_iter: int = 300, eps: float = 1e-16) -> float:
    # modified Lentz evaluation of the continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c, d = 1.0, 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def betainc(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x in (0.0, 1.0):
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


@dataclass
class PearsonResult:
    r: float
    n: int
    ci_low: Optional[float]
    ci_high: Optional[float]
    p_value: Optional[float]

    @property
    def significant(self) -> bool:
        return self.p_value is not None and self.p_value < 0.05


def pearson(x: Sequence[float], y: Sequence[float]) -> PearsonResult:
    """Sample correlation, 95% Fisher-z interval and two-sided t-test p-value.

    The interval needs n > 3 and the p-value n > 2; both are None otherwise.
    """
    n = len(x)
    if n != len(y):
        raise ValueError("x and y differ in length")
    if n < 2:
        raise UndefinedCorrelation("need at least two points")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(v * v for v in dx)
    syy = math.fsum(v * v for v in dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("correlation is undefined for constant input")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    ci_low = ci_high = p = None
    if n > 3:
        if abs(r) == 1.0:
            ci_low = ci_high = r
        else:
            z = math.atanh(r)
            half = Z95 / math.sqrt(n - 3)
            ci_low, ci_high = math.tanh(z - half), math.tanh(z + half)
    if n > 2:
        if abs(r) == 1.0:
            p = 0.0
        else:
            t = r * math.sqrt((n - 2) / (1.0 - r * r))
            p = t_two_sided_p(t, n - 2)
    return PearsonResult(r, n, ci_low, ci_high, p)
