"""Tail bounds on J_n = ||p_hat_n - p||_1 and their inversion into sample sizes.

Every bound is reported as a :class:`BoundResult` holding the raw exponential
expression, its log, and the value clamped to [0, 1].  Bounds whose
precondition fails at (n, eps) are reported with ``applicable=False`` and the
trivial value 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .distributions import Distribution, a_n, b_n, nu

BOUND_NAMES = (
    "crude",
    "devroye",
    "mcdiarmid_centered",
    "finite_k",
    "nu_bound",
    "general_ab",
    "dkw_sup",
    "linf",
)

# Bounds on P(J_n > eps) at an absolute level, in tie-break preference order.
J_BOUNDS = ("general_ab", "nu_bound", "finite_k", "devroye", "crude")

N_MAX = 2 ** 40


@dataclass(frozen=True)
class BoundResult:
    bound_name: str
    n: int
    epsilon: float
    value: float
    raw_value: float
    log_raw_value: float
    applicable: bool
    precondition_note: str = ""


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"sample size n must be a positive integer, got {n!r}")
    return int(n)


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not eps > 0 or math.isnan(eps):
        raise ValueError(f"eps must be positive, got {eps!r}")
    return eps


def _check_k(k) -> int:
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise ValueError(f"support size k must be a positive integer, got {k!r}")
    return int(k)


def _result(name: str, n: int, eps: float, log_raw: float, applicable: bool = True,
            note: str = "") -> BoundResult:
    raw = math.exp(log_raw) if log_raw < 709.0 else math.inf
    value = min(1.0, raw) if applicable else 1.0
    return BoundResult(name, n, eps, value, raw, log_raw, applicable, note)


def _inapplicable(name: str, n: int, eps: float, note: str) -> BoundResult:
    return BoundResult(name, n, eps, 1.0, math.nan, math.nan, False, note)


def crude_bound(k: int, n: int, eps: float) -> BoundResult:
    """Chernoff-Hoeffding plus union bound: 2k exp(-2 n eps^2 / k^2)."""
    k, n, eps = _check_k(k), _check_n(n), _check_eps(eps)
    return _result("crude", n, eps, math.log(2 * k) - 2.0 * n * eps * eps / (k * k))


def devroye_bound(k: int, n: int, eps: float) -> BoundResult:
    """3 exp(-n eps^2 / 25), valid for eps >= sqrt(20k/n)."""
    k, n, eps = _check_k(k), _check_n(n), _check_eps(eps)
    threshold = math.sqrt(20.0 * k / n)
    ok = eps >= threshold
    note = "" if ok else f"needs eps >= sqrt(20k/n) = {threshold:.6g}"
    return _result("devroye", n, eps, math.log(3.0) - n * eps * eps / 25.0, ok, note)


def mcdiarmid_centered(n: int, eps: float) -> BoundResult:
    """P(J_n > E J_n + eps) <= exp(-n eps^2 / 2)."""
    n, eps = _check_n(n), _check_eps(eps)
    return _result("mcdiarmid_centered", n, eps, -n * eps * eps / 2.0)


def _centered(name: str, n: int, t: float, center: float, strict: bool) -> BoundResult:
    gap = t - center
    ok = gap > 0 if strict else gap >= 0
    rel = ">" if strict else ">="
    note = "" if ok else f"needs eps {rel} {center:.6g}"
    return _result(name, n, t, -n * gap * gap / 2.0, ok, note)


def finite_k_bound(k: int, n: int, eps: float) -> BoundResult:
    """exp(-(n/2)(eps - sqrt(k/n))^2) for eps >= sqrt(k/n)."""
    k, n, eps = _check_k(k), _check_n(n), _check_eps(eps)
    return _centered("finite_k", n, eps, math.sqrt(k / n), strict=False)


def nu_bound(nu_value: float, n: int, t: float) -> BoundResult:
    """exp(-n (t - nu/sqrt n)^2 / 2) for the absolute level t > nu/sqrt n."""
    n, t = _check_n(n), _check_eps(t)
    nu_value = float(nu_value)
    if not math.isfinite(nu_value):
        raise ValueError("nu(p) diverges; use general_bound instead")
    if nu_value < 1.0 - 1e-9:
        raise ValueError(f"nu(p) >= 1 for every distribution, got {nu_value!r}")
    return _centered("nu_bound", n, t, nu_value / math.sqrt(n), strict=True)


def general_bound(a: float, b: float, n: int, t: float) -> BoundResult:
    """exp(-n (t - A_n - B_n)^2 / 2) for the absolute level t > A_n + B_n."""
    n, t = _check_n(n), _check_eps(t)
    if a < 0 or b < 0:
        raise ValueError("A_n and B_n are nonnegative")
    return _centered("general_ab", n, t, a + b, strict=True)


def mean_lower_bound(a: float, b: float, n: int) -> float:
    """max(0, (A_n + B_n)/4 - 1/sqrt n); only claimed for n >= 2."""
    n = _check_n(n)
    if n < 2:
        raise ValueError("the lower bound on E J_n needs n >= 2")
    return max(0.0, (a + b) / 4.0 - 1.0 / math.sqrt(n))


def dkw_bound(n: int, eps: float) -> BoundResult:
    """P(sup_i |F_hat(i) - F(i)| > eps) <= 2 exp(-2 n eps^2)."""
    n, eps = _check_n(n), _check_eps(eps)
    return _result("dkw_sup", n, eps, math.log(2.0) - 2.0 * n * eps * eps)


def linf_bound(n: int, eps: float) -> BoundResult:
    """P(||p_hat - p||_inf > eps) <= 4 exp(-n eps^2 / 2)."""
    n, eps = _check_n(n), _check_eps(eps)
    return _result("linf", n, eps, math.log(4.0) - n * eps * eps / 2.0)


# -- distribution-level evaluation -------------------------------------------------


def breakpoint_for(n: int, scale: int = 1) -> float:
    """Break-point 1/(scale * n); scale 1 is the default, 4 the alternative."""
    if scale not in (1, 4):
        raise ValueError("breakpoint scale must be 1 (1/n) or 4 (1/(4n))")
    return 1.0 / (scale * n)


def ab_values(dist: Distribution, n: int, scale: int = 1) -> tuple[float, float]:
    bp = breakpoint_for(n, scale)
    return float(a_n(dist, n, bp)), float(b_n(dist, n, bp))


def evaluate_bound(name: str, dist: Distribution | None, n: int, eps: float, *,
                   k: int | None = None, nu_value: float | None = None,
                   scale: int = 1) -> BoundResult:
    """Evaluate one named bound for a distribution (or bare support size / nu)."""
    if k is None and dist is not None:
        k = dist.support_size
    if name in ("crude", "devroye", "finite_k"):
        if k is None:
            return _inapplicable(name, _check_n(n), _check_eps(eps), "needs finite support")
        return {"crude": crude_bound, "devroye": devroye_bound, "finite_k": finite_k_bound}[name](k, n, eps)
    if name == "mcdiarmid_centered":
        return mcdiarmid_centered(n, eps)
    if name == "dkw_sup":
        return dkw_bound(n, eps)
    if name == "linf":
        return linf_bound(n, eps)
    if name == "nu_bound":
        if nu_value is None:
            if dist is None:
                raise ValueError("nu_bound needs a distribution or an explicit nu value")
            nu_value = float(nu(dist))
        if not math.isfinite(nu_value):
            return _inapplicable(name, _check_n(n), _check_eps(eps), "nu(p) diverges")
        return nu_bound(nu_value, n, eps)
    if name == "general_ab":
        if dist is None:
            raise ValueError("general_ab needs a distribution")
        a, b = ab_values(dist, _check_n(n), scale)
        return general_bound(a, b, n, eps)
    raise ValueError(f"unknown bound {name!r}; choose from {', '.join(BOUND_NAMES)}")


def all_bounds(dist: Distribution, n: int, eps: float, scale: int = 1,
               nu_value: float | None = None) -> list[BoundResult]:
    if nu_value is None:
        nu_value = float(nu(dist))
    return [evaluate_bound(name, dist, n, eps, nu_value=nu_value, scale=scale)
            for name in BOUND_NAMES]


def best_bound(dist: Distribution, n: int, eps: float, scale: int = 1,
               nu_value: float | None = None) -> BoundResult:
    """Smallest applicable bound on P(J_n > eps); ties go to the earlier entry of J_BOUNDS."""
    if nu_value is None:
        nu_value = float(nu(dist))
    best = None
    for name in J_BOUNDS:
        res = evaluate_bound(name, dist, n, eps, nu_value=nu_value, scale=scale)
        if res.applicable and (best is None or res.value < best.value):
            best = res
    if best is None:
        return BoundResult("trivial", _check_n(n), _check_eps(eps), 1.0, 1.0, 0.0, True,
                           "no bound applicable")
    return best


# -- sample-size planning --------------------------------------------------------


class PlanningError(RuntimeError):
    """The target failure probability is not reached below the search cap."""


@dataclass(frozen=True)
class PlanResult:
    bound_name: str
    epsilon: float
    delta: float
    n_star: int
    achieved: float


def plan_n(bound_name: str, eps: float, delta: float, *, dist: Distribution | None = None,
           k: int | None = None, nu_value: float | None = None, scale: int = 1,
           n_max: int = N_MAX) -> PlanResult:
    """Smallest n whose bound value is at most delta.

    Exponential search from n = 1 followed by bisection.  Every probe
    re-evaluates the bound from scratch, so n-dependent thresholds and the
    functionals A_n, B_n are recomputed at each candidate.
    """
    eps = _check_eps(eps)
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if bound_name == "nu_bound" and nu_value is None:
        if dist is None:
            raise ValueError("nu_bound needs a distribution or an explicit nu value")
        nu_value = float(nu(dist))

    def value_at(n: int) -> float:
        return evaluate_bound(bound_name, dist, n, eps, k=k, nu_value=nu_value, scale=scale).value

    return _search(bound_name, eps, delta, value_at, n_max)


def _search(name: str, eps: float, delta: float, value_at: Callable[[int], float],
            n_max: int) -> PlanResult:
    hi = 1
    while value_at(hi) > delta:
        if hi >= n_max:
            raise PlanningError(f"{name}: bound stays above delta={delta:g} up to n={n_max}")
        hi = min(hi * 2, n_max)
    lo = hi // 2  # value_at(lo) > delta, or lo == 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if value_at(mid) <= delta:
            hi = mid
        else:
            lo = mid
    return PlanResult(name, eps, delta, hi, value_at(hi))
