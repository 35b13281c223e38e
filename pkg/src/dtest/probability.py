"""Closed-form match probabilities under uniform i.i.d. symbols.

Model: an n x m matrix whose column j holds independent symbols drawn
uniformly from k_j values. Three quantities are provided:

* probability that at least two rows coincide (uniform k, and per-column k);
* probability that at least ``l`` columns are not constant down the rows;
* probability that a single column is constant.

Every result is a :class:`ProbabilityValue` carrying a float, its natural
log, and optionally the exact rational.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import OracleRangeError, ParameterError, TractabilityError

# Exact rationals are refused beyond this many bits of work.
EXACT_BIT_LIMIT = 1 << 22
ORACLE_MAX_COLUMNS = 20


@dataclass(frozen=True)
class AlphabetProfile:
    sizes: tuple[int, ...]
    n: int

    def __post_init__(self):
        sizes = tuple(int(k) for k in self.sizes)
        if not sizes:
            raise ParameterError("profile needs at least one column")
        if any(k < 2 for k in sizes):
            raise ParameterError(f"alphabet sizes must be >= 2, got {list(sizes)}", sizes=list(sizes))
        if int(self.n) < 1:
            raise ParameterError(f"row count must be >= 1, got {self.n}", n=self.n)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def uniform(cls, n: int, m: int, k: int) -> "AlphabetProfile":
        _check_int("m", m, 1)
        return cls((k,) * m, n)

    @property
    def m(self) -> int:
        return len(self.sizes)

    @property
    def log_K(self) -> float:
        return math.fsum(math.log(k) for k in self.sizes)

    @property
    def log2_K(self) -> float:
        return math.fsum(math.log2(k) for k in self.sizes)


@dataclass(frozen=True)
class ProbabilityValue:
    log_value: float
    float_value: float
    exact: Fraction | None = None

    def to_dict(self) -> dict:
        out = {"float": self.float_value, "log": self.log_value if math.isfinite(self.log_value) else None}
        if self.exact is not None:
            out["exact"] = {
                "numerator": str(self.exact.numerator),
                "denominator": str(self.exact.denominator),
                "rational": str(self.exact),
            }
        return out


def _check_int(name, value, minimum):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}", **{name: value})


def _log1mexp(s: float) -> float:
    """log(1 - exp(s)) for s <= 0."""
    if s == 0.0:
        return -math.inf
    if s > -math.log(2):
        return math.log(-math.expm1(s))
    return math.log1p(-math.exp(s))


def _from_log_complement(s: float, exact: Fraction | None = None) -> ProbabilityValue:
    # value = 1 - exp(s)
    p = -math.expm1(s)
    return ProbabilityValue(_log1mexp(s), min(max(p, 0.0), 1.0), exact)


def _from_float(p: float, exact: Fraction | None = None) -> ProbabilityValue:
    p = min(max(p, 0.0), 1.0)
    return ProbabilityValue(math.log(p) if p > 0 else -math.inf, p, exact)


def _exact_K(profile: AlphabetProfile) -> int | None:
    # K as an integer is cheap to form well beyond double range
    if profile.log2_K > 4096:
        return None
    return math.prod(profile.sizes)


def _require_exact_budget(bits: float, what: str):
    if bits > EXACT_BIT_LIMIT:
        raise TractabilityError(
            f"exact {what} needs ~{bits:.3g} bits of work, limit is {EXACT_BIT_LIMIT}",
            bits=bits,
            limit=EXACT_BIT_LIMIT,
        )


def _row_match(profile: AlphabetProfile, exact: bool) -> ProbabilityValue:
    n = profile.n
    K = _exact_K(profile)
    log_K = profile.log_K
    exact_value = None
    if exact:
        _require_exact_budget(n * profile.log2_K, "row-match probability")
        K_int = K if K is not None else math.prod(profile.sizes)
        if n > K_int:
            exact_value = Fraction(1)
        else:
            falling = 1
            for t in range(n):
                falling *= K_int - t
            exact_value = 1 - Fraction(falling, K_int**n)
    if K is not None and n > K:
        return ProbabilityValue(0.0, 1.0, exact_value)
    if n == 1:
        return ProbabilityValue(-math.inf, 0.0, exact_value)
    # no-collision probability is exp(S), S = sum_t log(1 - t/K); work with
    # log(-S) so that collision probabilities below double range keep a log
    terms = []
    for t in range(1, n):
        x = t / K if K is not None else 0.0
        log_x = math.log(x) if x > 1e-300 else math.log(t) - log_K
        terms.append(_log_neg_log1m(x, log_x))
    top = max(terms)
    log_neg_s = top + math.log(math.fsum(math.exp(a - top) for a in terms))
    if log_neg_s < -700:
        # 1 - exp(S) = -S (1 + S/2 + ...) with |S| far below double epsilon
        return ProbabilityValue(log_neg_s, math.exp(log_neg_s), exact_value)
    return _from_log_complement(-math.exp(log_neg_s), exact_value)


def _log_neg_log1m(x: float, log_x: float) -> float:
    """log(-log(1 - x)) for 0 < x < 1, given log(x)."""
    if x < 1e-5:
        # -log(1 - x) = x (1 + x/2 + x^2/3 + ...)
        return log_x + math.log1p(x / 2 + x * x / 3)
    return math.log(-math.log1p(-x))


def prob_row_match_uniform(n: int, m: int, k: int, exact: bool = False) -> ProbabilityValue:
    """Probability that some two of n rows of length m over k symbols coincide."""
    _check_int("n", n, 1)
    _check_int("m", m, 1)
    _check_int("k", k, 2)
    return _row_match(AlphabetProfile.uniform(n, m, k), exact)


def prob_row_match_profile(profile: AlphabetProfile, exact: bool = False) -> ProbabilityValue:
    """Row-collision probability when column j has its own alphabet size k_j.

    Depends on the sizes only through K = prod k_j, the number of distinct
    rows; K is never converted to a float.
    """
    return _row_match(profile, exact)


def prob_column_all_equal(k: int, n: int, exact: bool = False) -> ProbabilityValue:
    """k^-(n-1): chance that n uniform symbols over k values are all equal."""
    _check_int("k", k, 2)
    _check_int("n", n, 1)
    log_value = -(n - 1) * math.log(k)
    if exact:
        _require_exact_budget((n - 1) * math.log2(k), "column probability")
    value = Fraction(1, k ** (n - 1)) if exact else None
    return ProbabilityValue(log_value, math.exp(log_value), value)


# -- at least l non-constant columns ----------------------------------------

_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _two_prod(a, b):
    p = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_mul_scalar(hi, lo, bh, bl):
    """(hi + lo) * (bh + bl) in double-double, vectorised over hi/lo."""
    p, e = _two_prod(hi, bh)
    e = e + (hi * bl + lo * bh)
    return _two_sum(p, e)


def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    e = e + (al + bl)
    return _two_sum(s, e)


def poisson_binomial_tail(q_values: Sequence[float], l: int) -> float:
    """P(X >= l) for X = number of successes, trial i failing with prob q_i.

    Runs the O(m^2) count-distribution recurrence in double-double
    arithmetic; success probabilities 1 - q_i are formed exactly as
    double-double pairs so no cancellation is lost for q_i near 0 or 1.
    """
    m = len(q_values)
    if l <= 0:
        return 1.0
    if l > m:
        return 0.0
    hi = np.zeros(m + 1)
    lo = np.zeros(m + 1)
    hi[0] = 1.0
    for i, q in enumerate(q_values):
        q = float(q)
        p_hi, p_lo = _two_sum(1.0, -q)
        w = i + 1
        stay_h, stay_l = _dd_mul_scalar(hi[: w + 1], lo[: w + 1], q, 0.0)
        move_h, move_l = _dd_mul_scalar(hi[:w], lo[:w], p_hi, p_lo)
        nh, nl = stay_h.copy(), stay_l.copy()
        nh[1:], nl[1:] = _dd_add(stay_h[1:], stay_l[1:], move_h, move_l)
        hi[: w + 1], lo[: w + 1] = nh, nl
    tail = math.fsum(hi[l:].tolist()) + math.fsum(lo[l:].tolist())
    return min(max(tail, 0.0), 1.0)


def _exact_matching_test(profile: AlphabetProfile, l: int) -> Fraction:
    # coefficients of prod_i (1 + (k_i^(n-1) - 1) x) over the common denominator
    e = profile.n - 1
    coeffs = [1]
    for k in profile.sizes:
        a = k**e - 1
        nxt = coeffs + [0]
        for j in range(len(coeffs)):
            nxt[j + 1] += coeffs[j] * a
        coeffs = nxt
    denom = math.prod(profile.sizes) ** e
    return Fraction(sum(coeffs[l:]), denom)


def prob_matching_test(profile: AlphabetProfile, l: int, exact: bool = False) -> ProbabilityValue:
    """Probability that at least ``l`` of the m columns are non-constant.

    Column i is non-constant across n rows with probability
    1 - k_i^-(n-1), independently of the others, so the subset sum over
    column sets of size >= l is the upper tail of a Poisson-binomial count.
    """
    _check_int("l", l, 0)
    n, m = profile.n, profile.m
    exact_value = None
    if exact:
        _require_exact_budget(m * m * (n - 1) * max(math.log2(k) for k in profile.sizes), "matching-test probability")
        exact_value = _exact_matching_test(profile, l) if l <= m else Fraction(0)
    if n == 1:
        return _from_float(1.0 if l == 0 else 0.0, exact_value)
    q = [math.exp(-(n - 1) * math.log(k)) for k in profile.sizes]
    return _from_float(poisson_binomial_tail(q, l), exact_value)


def subset_sum_tails(profile: AlphabetProfile) -> list[Fraction]:
    """Literal subset sums for every threshold l = 0..m+1 from one pass over 2^m subsets.

    Entry l is sum over |S| >= l of prod_{i in S}(k_i^(n-1) - 1) / (prod k_i)^(n-1),
    accumulated term by term with big integers.
    """
    if profile.m > ORACLE_MAX_COLUMNS:
        raise OracleRangeError(f"subset oracle limited to {ORACLE_MAX_COLUMNS} columns, got {profile.m}")
    if profile.n < 2:
        raise ParameterError("subset oracle needs n >= 2")
    e = profile.n - 1
    factors = [k**e - 1 for k in profile.sizes]
    by_size = [0] * (profile.m + 1)
    for size in range(profile.m + 1):
        for subset in itertools.combinations(range(profile.m), size):
            by_size[size] += math.prod(factors[i] for i in subset)
    denom = math.prod(profile.sizes) ** e
    tails = [Fraction(0)] * (profile.m + 2)
    for l in range(profile.m, -1, -1):
        tails[l] = tails[l + 1] + Fraction(by_size[l], denom)
    return tails


def prob_matching_test_subset_oracle(profile: AlphabetProfile, l: int) -> ProbabilityValue:
    """Exact subset-sum evaluation of :func:`prob_matching_test` (m <= 20).

    Enumerates all 2^m column subsets; a check on the production path.
    """
    _check_int("l", l, 0)
    tails = subset_sum_tails(profile)
    value = tails[l] if l < len(tails) else Fraction(0)
    return _from_float(float(value), value)


def prob_row_match_enumeration_oracle(profile: AlphabetProfile, block: int = 1 << 20) -> Fraction:
    """Row-collision probability by visiting all K^n matrices.

    A matrix is a tuple of n row codes in [0, K), each code the mixed-radix
    encoding of one row's cells, so codes coincide exactly when rows do.
    The trailing rows are expanded into one vectorised block of seen-code
    bitmasks, the leading rows are looped over; every matrix is checked
    once. Needs K <= 62.
    """
    K = math.prod(profile.sizes)
    n = profile.n
    if K > 62:
        raise OracleRangeError(f"enumeration oracle needs K <= 62, got {K}")
    if K**n > 1 << 34:
        raise OracleRangeError(f"enumeration oracle refuses {K**n} matrices")
    bits = np.left_shift(np.uint64(1), np.arange(K, dtype=np.uint64))
    t = 1
    while t < n and K ** (t + 1) <= block:
        t += 1
    tail = bits
    for _ in range(t - 1):
        tail = (tail[:, None] | bits[None, :]).ravel()
    distinct = 0
    for head in itertools.product(range(K), repeat=n - t):
        mask = 0
        for r in head:
            mask |= 1 << r
        distinct += int(np.count_nonzero(np.bitwise_count(tail | np.uint64(mask)) == n))
    total = K**n
    return Fraction(total - distinct, total)
