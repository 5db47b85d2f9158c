"""Hypothesis tests used by the simulation study.

Mann-Whitney U, Pearson correlation and one-way ANOVA, all two-sided.
The t and F tail probabilities go through a continued-fraction evaluation
of the regularized incomplete beta function, so nothing here depends on
scipy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import DegenerateInputError, DegenerateVariableError, InvalidArgumentError

BETACF_TOL = 1e-14
BETACF_MAX_ITER = 10_000
_TINY = 1e-300

# Both samples at most this size and no ties: exact null distribution of U.
MWU_EXACT_MAX_N = 8


class Method(str, Enum):
    MANN_WHITNEY_U = "mann_whitney_u"
    PEARSON_R = "pearson_r"
    ANOVA_F = "anova_f"


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: Method

    __test__ = False  # keep pytest from collecting this class


# ---------------------------------------------------------------------------
# special functions

def _betacf(a, b, x):
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < BETACF_TOL:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise InvalidArgumentError(f"betainc requires a > 0 and b > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise InvalidArgumentError(f"betainc requires x in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # the fraction converges fast only on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t, df):
    """Two-sided tail probability of Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise InvalidArgumentError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    return _clip01(betainc(df / 2.0, 0.5, df / (df + t * t)))


def f_sf(f, df1, df2):
    """Upper tail probability of the F distribution."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return _clip01(betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f)))


def normal_two_sided_p(z):
    return _clip01(math.erfc(abs(z) / math.sqrt(2.0)))


def _clip01(p):
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# Mann-Whitney U

def midranks(values):
    """Ranks 1..n with tied values sharing the mean of their positions."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    n = len(values)
    # boundaries of runs of equal values
    change = np.flatnonzero(np.diff(sorted_vals)) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [n]))
    ranks = np.empty(n, dtype=float)
    run_rank = (starts + ends + 1) / 2.0
    ranks[order] = np.repeat(run_rank, ends - starts)
    return ranks, ends - starts


@lru_cache(maxsize=None)
def _u_null_counts(n1, n2):
    """Number of arrangements giving each value of U_1, for u = 0..n1*n2."""
    # f[i][j] holds the count vector for sample sizes (i, j)
    prev = [np.zeros(n1 * n2 + 1, dtype=np.int64) for _ in range(n2 + 1)]
    for j in range(n2 + 1):
        prev[j][0] = 1  # i = 0
    for i in range(1, n1 + 1):
        cur = [None] * (n2 + 1)
        cur[0] = np.zeros(n1 * n2 + 1, dtype=np.int64)
        cur[0][0] = 1
        for j in range(1, n2 + 1):
            # largest pooled value comes from sample 1 (beats all j of sample 2) or sample 2
            v = cur[j - 1].copy()
            v[j:] += prev[j][: len(v) - j]
            cur[j] = v
        prev = cur
    counts = prev[n2]
    counts.setflags(write=False)
    return counts


def mann_whitney_exact_p(u, n1, n2):
    """Two-sided exact p-value for U_1 = u under no ties."""
    counts = _u_null_counts(n1, n2)
    total = counts.sum()
    u_lo = min(u, n1 * n2 - u)
    k = int(math.floor(u_lo + 1e-9))
    return _clip01(2.0 * counts[: k + 1].sum() / total)


def mann_whitney_u(sample_a, sample_b, method="auto"):
    """Two-sided Mann-Whitney U test.

    The statistic is ``min(U_a, U_b)`` computed from midranks. With
    ``method="auto"`` the exact null distribution is used when both samples
    have at most 8 values and there are no ties; otherwise the normal
    approximation with tie-corrected variance and continuity correction.
    ``method`` may also be ``"exact"`` or ``"normal"``.
    """
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise InvalidArgumentError("mann_whitney_u needs two nonempty samples")
    ranks, tie_sizes = midranks(np.concatenate((a, b)))
    u_a = ranks[:n1].sum() - n1 * (n1 + 1) / 2.0
    u_b = n1 * n2 - u_a
    u = min(u_a, u_b)
    has_ties = bool(np.any(tie_sizes > 1))

    if method == "auto":
        method = "exact" if (max(n1, n2) <= MWU_EXACT_MAX_N and not has_ties) else "normal"
    if method == "exact":
        if has_ties:
            raise InvalidArgumentError("exact Mann-Whitney p-value requires untied samples")
        p = mann_whitney_exact_p(u_a, n1, n2)
    elif method == "normal":
        n = n1 + n2
        tie_term = float(np.sum(tie_sizes ** 3 - tie_sizes)) / (n * (n - 1)) if n > 1 else 0.0
        var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
        if var <= 0:
            p = 1.0
        else:
            z = max(abs(u_a - n1 * n2 / 2.0) - 0.5, 0.0) / math.sqrt(var)
            p = normal_two_sided_p(z)
    else:
        raise InvalidArgumentError(f"unknown Mann-Whitney method {method!r}")
    return TestResult(float(u), p, Method.MANN_WHITNEY_U)


# ---------------------------------------------------------------------------
# Pearson correlation

def pearson_r(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if len(a) != len(b):
        raise InvalidArgumentError(f"pearson needs equal lengths, got {len(a)} and {len(b)}")
    for idx, v in enumerate((a, b)):
        if np.ptp(v) == 0:
            raise DegenerateVariableError(idx)
    da = a - a.mean()
    db = b - b.mean()
    r = float(np.dot(da, db) / math.sqrt(np.dot(da, da) * np.dot(db, db)))
    return max(-1.0, min(1.0, r))


def pearson_test(a, b):
    """Pearson r with a two-sided p-value from the t distribution on n-2 df."""
    n = len(a)
    if n < 3:
        raise InvalidArgumentError(f"pearson_test needs at least 3 pairs, got {n}")
    r = pearson_r(a, b)
    df = n - 2
    if abs(r) == 1.0:
        return TestResult(r, 0.0, Method.PEARSON_R)
    t = r * math.sqrt(df / (1.0 - r * r))
    return TestResult(r, t_two_sided_p(t, df), Method.PEARSON_R)


# ---------------------------------------------------------------------------
# one-way ANOVA

def anova_oneway(groups):
    """One-way ANOVA F test across a list of samples."""
    groups = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(groups) < 2:
        raise InvalidArgumentError(f"anova_oneway needs at least 2 groups, got {len(groups)}")
    for i, g in enumerate(groups):
        if len(g) < 2:
            raise InvalidArgumentError(f"group {i} has {len(g)} value(s); at least 2 required")
    n_total = sum(len(g) for g in groups)
    k = len(groups)
    grand = np.concatenate(groups).mean()
    ss_between = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(float(np.sum((g - g.mean()) ** 2)) for g in groups)
    if ss_within == 0.0:
        raise DegenerateInputError("anova_oneway: every group has zero within-group variance")
    df1, df2 = k - 1, n_total - k
    f = float((ss_between / df1) / (ss_within / df2))
    return TestResult(f, f_sf(f, df1, df2), Method.ANOVA_F)
