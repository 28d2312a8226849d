"""Mean absolute deviation of the binomial distribution.

All products C(n, k) p^k (1 - p)^m are formed in log space with log-gamma and
exponentiated last, so n in the millions is safe.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

BRUTEFORCE_MAX_N = 1000


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    return p


def _log_choose(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _xlogy(x: float, y: float) -> float:
    # x log y with the 0 log 0 = 0 convention
    if x == 0:
        return 0.0
    if y == 0:
        return -math.inf
    return x * math.log(y)


def log_binomial_pmf(n: int, k: int, p: float) -> float:
    """log of C(n, k) p^k (1 - p)^(n - k); ``-inf`` on zero-probability corners."""
    if n < 0 or not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    p = _check_p(p)
    return _log_choose(n, k) + _xlogy(k, p) + _xlogy(n - k, 1.0 - p)


def mad_exact(n: int, p: float) -> float:
    """E|Y - np| for Y ~ Bin(n, p), via the closed form with k = floor(np) + 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = _check_p(p)
    if p == 0.0 or p == 1.0:
        return 0.0
    k = math.floor(n * p) + 1
    if k > n:
        return 0.0
    return math.exp(_log_e(n, k, p))


def mad_small_p(n: int, p: float) -> float:
    """2 n (1 - p)^n p, the closed form specialised to p < 1/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = _check_p(p)
    if not p < 1.0 / n:
        raise ValueError(f"small-p formula needs p < 1/n = {1.0 / n!r}, got {p!r}")
    if p == 0.0:
        return 0.0
    return 2.0 * n * p * math.exp(n * math.log1p(-p))


def mad_bruteforce(n: int, p: float) -> float:
    """sum_k |k - np| P(Y = k), summed with :func:`math.fsum`."""
    if not 1 <= n <= BRUTEFORCE_MAX_N:
        raise ValueError(f"brute force is limited to 1 <= n <= {BRUTEFORCE_MAX_N}")
    p = _check_p(p)
    mean = n * p
    return math.fsum(abs(k - mean) * math.exp(log_binomial_pmf(n, k, p)) for k in range(n + 1))


@dataclass(frozen=True)
class MadTriple:
    lower: float | None
    exact: float
    upper: float

    @property
    def lower_applicable(self) -> bool:
        return self.lower is not None


def lower_bound_domain(n: int, p: float) -> bool:
    return n >= 2 and 1.0 / n <= p <= 1.0 - 1.0 / n


def mad_bounds(n: int, p: float) -> MadTriple:
    """(sqrt(np(1-p)/2), E|Y - np|, sqrt(np(1-p))).

    The upper bound holds for every p.  The lower one is only claimed for
    n >= 2 and p in [1/n, 1 - 1/n]; outside that range it is reported as None.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p = _check_p(p)
    var = n * p * (1.0 - p)
    lower = math.sqrt(var / 2.0) if lower_bound_domain(n, p) else None
    return MadTriple(lower, mad_exact(n, p), math.sqrt(var))


def _log_e(n: int, k: int, p: float) -> float:
    return math.log(2.0 * k) + _log_choose(n, k) + k * math.log(p) + (n - k + 1) * math.log1p(-p)


def g_function(n: int, k: int, p: float) -> float:
    """2 E(n,k,p)^2 / (p(1-p)) with E(n,k,p) = 2k C(n,k) p^k (1-p)^(n-k+1)."""
    if n < 3:
        raise ValueError("g_function needs n >= 3")
    if not 2 <= k <= n - 1:
        raise ValueError(f"need 2 <= k <= n - 1, got k={k}, n={n}")
    p = _check_p(p)
    if not (k - 1) / n <= p <= k / n:
        raise ValueError(f"p={p!r} outside [{(k - 1) / n!r}, {k / n!r}]")
    return math.exp(math.log(2.0) + 2.0 * _log_e(n, k, p) - math.log(p) - math.log1p(-p))

