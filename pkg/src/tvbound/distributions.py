"""Countable distributions on {1, 2, ...} and the functionals that control E J_n.

Every family exposes its pmf, cdf and exact upper tail on the index set
j = 1, 2, ... (Poisson is shifted so its zero atom sits at index 1), plus
certified analytic bounds on the omitted mass of a finite prefix.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import mpmath
import numpy as np
from scipy.special import gammaln, pdtr, pdtrc, zeta

EPS = float(np.finfo(float).eps)
PROB_SUM_TOL = 1e-12
DEFAULT_TOL = 1e-12
# Enumerations longer than this switch to closed forms / Hurwitz zeta.
_MAX_ENUM = 1 << 20


class Distribution:
    """Base class for a probability distribution over the positive integers."""

    family: str = ""

    # -- per-family primitives, vectorised over integer index arrays --------
    def pmf(self, j):
        raise NotImplementedError

    def sf(self, j):
        """Exact mass strictly beyond index ``j`` (``sf(0) == 1``)."""
        raise NotImplementedError

    def cdf(self, j):
        raise NotImplementedError

    def tail_bound(self, cutoff: int) -> float:
        """Certified upper bound on sum_{j > cutoff} p_j."""
        raise NotImplementedError

    def sqrt_tail_bound(self, cutoff: int) -> float:
        """Certified upper bound on sum_{j > cutoff} sqrt(p_j)."""
        raise NotImplementedError

    # -- structure ---------------------------------------------------------
    @property
    def support_size(self) -> int | None:
        """k for finite supports, ``None`` for infinite ones."""
        return None

    @property
    def mode(self) -> int:
        return 1

    def level_set(self, threshold: float) -> tuple[int, int]:
        """Index interval ``[lo, hi]`` of atoms with p_j >= threshold.

        Empty sets are returned as ``(1, 0)``.  Only valid for unimodal
        families; :class:`Finite` overrides the functionals that use it.
        """
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def name(self) -> str:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def __repr__(self) -> str:
        return self.name


def _as_index(j):
    return np.asarray(j, dtype=np.int64)


def _scalar_or_array(out, j):
    return float(out) if np.ndim(j) == 0 else out


@dataclass(frozen=True, repr=False, eq=False)
class Finite(Distribution):
    probs: tuple[float, ...]

    family = "finite"

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs:
            raise ValueError("finite distribution needs at least one atom")
        if any(not math.isfinite(p) or p < 0 for p in probs):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(math.fsum(probs) - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        object.__setattr__(self, "probs", probs)
        p = np.array(probs)
        object.__setattr__(self, "_p", p)
        # Tail masses summed from the right so tiny trailing atoms keep precision.
        tails = np.array([math.fsum(probs[i:]) for i in range(1, len(probs))] + [0.0])
        object.__setattr__(self, "_sf", np.concatenate([[1.0], tails]))

    @property
    def support_size(self) -> int:
        return len(self.probs)

    @property
    def mode(self) -> int:
        return int(np.argmax(self._p)) + 1

    def pmf(self, j):
        j = _as_index(j)
        k = len(self.probs)
        inside = (j >= 1) & (j <= k)
        out = np.where(inside, self._p[np.clip(j - 1, 0, k - 1)], 0.0)
        return _scalar_or_array(out, j)

    def sf(self, j):
        j = _as_index(j)
        out = self._sf[np.clip(j, 0, len(self.probs))]
        return _scalar_or_array(out, j)

    def cdf(self, j):
        j = _as_index(j)
        head = np.concatenate([[0.0], np.cumsum(self._p)])
        out = np.where(j >= len(self.probs), 1.0, head[np.clip(j, 0, len(self.probs))])
        return _scalar_or_array(out, j)

    def tail_bound(self, cutoff: int) -> float:
        return float(self.sf(cutoff))

    def sqrt_tail_bound(self, cutoff: int) -> float:
        return math.fsum(math.sqrt(p) for p in self.probs[cutoff:])

    def to_dict(self) -> dict:
        return {"family": "finite", "probs": list(self.probs)}

    @property
    def name(self) -> str:
        k = len(self.probs)
        if k == 1:
            return "point_mass"
        if all(p == self.probs[0] for p in self.probs):
            return f"uniform(k={k})"
        return f"finite(k={k})"


@dataclass(frozen=True, repr=False, eq=False)
class SlowRate(Finite):
    """Finite atoms produced by :func:`construct_slow_rate`."""

    rates: tuple[float, ...] = ()

    family = "slowrate"

    def to_dict(self) -> dict:
        return {"family": "slowrate", "rates": list(self.rates)}

    @property
    def name(self) -> str:
        return f"slowrate(N={len(self.rates)})"


@dataclass(frozen=True, repr=False)
class Geometric(Distribution):
    """p_j = (1 - q) q^(j-1) for j >= 1."""

    q: float

    family = "geometric"

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"geometric q must lie in (0, 1), got {self.q!r}")

    def pmf(self, j):
        j = _as_index(j)
        out = np.where(j >= 1, (1.0 - self.q) * np.power(self.q, np.maximum(j - 1, 0).astype(float)), 0.0)
        return _scalar_or_array(out, j)

    def sf(self, j):
        j = _as_index(j)
        out = np.power(self.q, np.maximum(j, 0).astype(float))
        return _scalar_or_array(out, j)

    def cdf(self, j):
        j = _as_index(j)
        out = -np.expm1(np.maximum(j, 0) * math.log(self.q))
        return _scalar_or_array(out, j)

    def tail_bound(self, cutoff: int) -> float:
        return self.q ** cutoff

    def sqrt_tail_bound(self, cutoff: int) -> float:
        rq = math.sqrt(self.q)
        return math.sqrt(1.0 - self.q) * rq ** cutoff / (1.0 - rq)

    def level_set(self, threshold: float) -> tuple[int, int]:
        if threshold <= 0:
            raise ValueError("threshold must be positive")
        if threshold > 1.0 - self.q:
            return 1, 0
        hi = 1 + int(math.floor(math.log(threshold / (1.0 - self.q)) / math.log(self.q)))
        return 1, _adjust_decreasing(self, max(hi, 1), threshold)

    def to_dict(self) -> dict:
        return {"family": "geometric", "q": self.q}

    @property
    def name(self) -> str:
        return f"geometric(q={self.q:g})"


@dataclass(frozen=True, repr=False)
class Poisson(Distribution):
    """Poisson(lambda) with value m placed at index m + 1."""

    lam: float

    family = "poisson"

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"poisson lambda must be positive, got {self.lam!r}")

    @property
    def mode(self) -> int:
        return int(math.floor(self.lam)) + 1

    def pmf(self, j):
        j = _as_index(j)
        m = np.maximum(j - 1, 0).astype(float)
        out = np.where(j >= 1, np.exp(m * math.log(self.lam) - self.lam - gammaln(m + 1.0)), 0.0)
        return _scalar_or_array(out, j)

    def sf(self, j):
        # mass at values >= j, i.e. P(value > j - 1)
        j = _as_index(j)
        out = np.where(j <= 0, 1.0, pdtrc(np.maximum(j - 1, 0), self.lam))
        return _scalar_or_array(out, j)

    def cdf(self, j):
        j = _as_index(j)
        out = np.where(j <= 0, 0.0, pdtr(np.maximum(j - 1, 0), self.lam))
        return _scalar_or_array(out, j)

    def _ratio(self, cutoff: int) -> float:
        # p_{j+1} / p_j = lambda / j for indices j > cutoff
        r = self.lam / (cutoff + 1)
        if r >= 1.0:
            raise ValueError("ratio-domination bound needs cutoff + 1 > lambda")
        return r

    def tail_bound(self, cutoff: int) -> float:
        return float(self.pmf(cutoff + 1)) / (1.0 - self._ratio(cutoff))

    def sqrt_tail_bound(self, cutoff: int) -> float:
        return math.sqrt(float(self.pmf(cutoff + 1))) / (1.0 - math.sqrt(self._ratio(cutoff)))

    def level_set(self, threshold: float) -> tuple[int, int]:
        if threshold <= 0:
            raise ValueError("threshold must be positive")
        m = self.mode
        if self.pmf(m) < threshold:
            return 1, 0
        # right flank: pmf decreasing for j >= m
        step = 1
        while self.pmf(m + step) >= threshold:
            step *= 2
        lo_r, hi_r = m + step // 2, m + step  # pmf(lo_r) >= t > pmf(hi_r)
        while hi_r - lo_r > 1:
            mid = (lo_r + hi_r) // 2
            if self.pmf(mid) >= threshold:
                lo_r = mid
            else:
                hi_r = mid
        # left flank: pmf increasing on [1, m]
        if self.pmf(1) >= threshold:
            lo = 1
        else:
            a, b = 1, m  # pmf(a) < t <= pmf(b)
            while b - a > 1:
                mid = (a + b) // 2
                if self.pmf(mid) >= threshold:
                    b = mid
                else:
                    a = mid
            lo = b
        return lo, lo_r

    def to_dict(self) -> dict:
        return {"family": "poisson", "lambda": self.lam}

    @property
    def name(self) -> str:
        return f"poisson(lambda={self.lam:g})"


@dataclass(frozen=True, repr=False)
class Zipf(Distribution):
    """p_j = j^(-s) / zeta(s) for j >= 1, s > 1."""

    s: float

    family = "zipf"

    def __post_init__(self):
        if not (self.s > 1 and math.isfinite(self.s)):
            raise ValueError(f"zipf exponent must exceed 1, got {self.s!r}")
        object.__setattr__(self, "_zeta", float(zeta(self.s)))

    @property
    def normalizer(self) -> float:
        return self._zeta

    def pmf(self, j):
        j = _as_index(j)
        jf = np.maximum(j, 1).astype(float)
        out = np.where(j >= 1, np.power(jf, -self.s) / self._zeta, 0.0)
        return _scalar_or_array(out, j)

    def sf(self, j):
        j = _as_index(j)
        jf = np.maximum(j, 0).astype(float)
        out = np.where(j <= 0, 1.0, zeta(self.s, jf + 1.0) / self._zeta)
        return _scalar_or_array(out, j)

    def cdf(self, j):
        j = _as_index(j)
        sf = np.asarray(self.sf(j))
        # 1 - sf loses precision only when the head is tiny, which never happens here
        out = np.where(j <= 0, 0.0, 1.0 - sf)
        return _scalar_or_array(out, j)

    def tail_bound(self, cutoff: int) -> float:
        if cutoff < 1:
            return 1.0
        return cutoff ** (1.0 - self.s) / ((self.s - 1.0) * self._zeta)

    def sqrt_tail_bound(self, cutoff: int) -> float:
        half = self.s / 2.0
        if half <= 1.0:
            return math.inf
        if cutoff < 1:
            cutoff = 1
            head = 1.0 / math.sqrt(self._zeta)
        else:
            head = 0.0
        return head + cutoff ** (1.0 - half) / ((half - 1.0) * math.sqrt(self._zeta))

    def level_set(self, threshold: float) -> tuple[int, int]:
        if threshold <= 0:
            raise ValueError("threshold must be positive")
        if threshold > 1.0 / self._zeta:
            return 1, 0
        guess = (threshold * self._zeta) ** (-1.0 / self.s)
        hi = int(min(math.floor(guess), 2 ** 62))
        return 1, _adjust_decreasing(self, max(hi, 1), threshold)

    def to_dict(self) -> dict:
        return {"family": "zipf", "s": self.s}

    @property
    def name(self) -> str:
        return f"zipf(s={self.s:g})"


def _adjust_decreasing(dist: Distribution, hi: int, threshold: float) -> int:
    """Correct a float estimate of max{j : p_j >= threshold} for a decreasing pmf."""
    while hi > 0 and dist.pmf(hi) < threshold:
        hi -= 1
    while dist.pmf(hi + 1) >= threshold:
        hi += 1
    return hi


def from_dict(payload: dict) -> Distribution:
    """Build a distribution from its ``{"family": ...}`` JSON object."""
    if not isinstance(payload, dict) or "family" not in payload:
        raise ValueError("distribution payload needs a 'family' field")
    family = str(payload["family"]).lower()
    try:
        if family == "finite":
            return Finite(tuple(payload["probs"]))
        if family == "geometric":
            return Geometric(float(payload["q"]))
        if family == "poisson":
            return Poisson(float(payload["lambda"]))
        if family == "zipf":
            return Zipf(float(payload["s"]))
        if family == "slowrate":
            return construct_slow_rate(payload["rates"])
    except KeyError as exc:
        raise ValueError(f"{family} distribution is missing field {exc}") from None
    except TypeError as exc:
        raise ValueError(f"malformed {family} distribution: {exc}") from None
    raise ValueError(f"unknown distribution family {payload['family']!r}")


def from_json(text: str) -> Distribution:
    return from_dict(json.loads(text))


def uniform(k: int) -> Finite:
    return Finite((1.0 / k,) * k)


# -- certified truncation ------------------------------------------------------


@dataclass(frozen=True)
class TruncationCertificate:
    cutoff_index: int
    tail_bound: float


def truncate(dist: Distribution, tol: float = DEFAULT_TOL) -> TruncationCertificate:
    """Smallest prefix length whose certified omitted mass is at most ``tol``."""
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    if isinstance(dist, Finite):
        return TruncationCertificate(len(dist.probs), 0.0)
    if isinstance(dist, Geometric):
        cutoff = max(0, math.ceil(math.log(tol) / math.log(dist.q)))
        while dist.tail_bound(cutoff) > tol:
            cutoff += 1
        while cutoff > 0 and dist.tail_bound(cutoff - 1) <= tol:
            cutoff -= 1
        return TruncationCertificate(cutoff, dist.tail_bound(cutoff))
    if isinstance(dist, Poisson):
        cutoff = max(1, math.floor(dist.lam))
        while True:
            if cutoff + 1 > dist.lam:
                bound = dist.tail_bound(cutoff)
                if bound <= tol:
                    return TruncationCertificate(cutoff, bound)
            cutoff += 1
    if isinstance(dist, Zipf):
        # J^(1-s) / ((s-1) zeta) <= tol  <=>  J >= ((s-1) zeta tol)^(-1/(s-1))
        with mpmath.workdps(30):
            target = mpmath.power((dist.s - 1) * dist.normalizer * mpmath.mpf(tol), -1 / (mpmath.mpf(dist.s) - 1))
            cutoff = int(mpmath.ceil(target))
        # float steps of 1 vanish for huge cutoffs, so bisect on integers instead of walking
        lo, hi = 0, max(2, 2 * cutoff)
        while dist.tail_bound(hi) > tol:
            hi *= 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if dist.tail_bound(mid) <= tol:
                hi = mid
            else:
                lo = mid
        return TruncationCertificate(hi, dist.tail_bound(hi))
    raise TypeError(f"unsupported distribution {dist!r}")


# -- functionals ---------------------------------------------------------------


@dataclass(frozen=True)
class FunctionalValue:
    value: float | None
    error_bound: float | None
    diverges: bool = False

    def __post_init__(self):
        if self.diverges and (self.value is not None or self.error_bound is not None):
            raise ValueError("a divergent functional carries no value")

    def __float__(self) -> float:
        return math.inf if self.diverges else float(self.value)


def _rounding_allowance(value: float, terms: int = 1) -> float:
    return float(8.0 * EPS * abs(value) * max(1.0, math.log2(terms + 1)))


def nu(dist: Distribution, tol: float = DEFAULT_TOL) -> FunctionalValue:
    """sum_j sqrt(p_j), or a divergence flag (Zipf with s <= 2)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(dist, Finite):
        value = math.fsum(math.sqrt(p) for p in dist.probs)
        return FunctionalValue(value, _rounding_allowance(value, len(dist.probs)))
    if isinstance(dist, Zipf):
        if dist.s <= 2.0:
            return FunctionalValue(None, None, diverges=True)
        value = float(zeta(dist.s / 2.0)) / math.sqrt(dist.normalizer)
        return FunctionalValue(value, 64 * EPS * value)
    # Geometric and Poisson: partial sum plus certified sqrt-tail remainder
    cutoff = max(1, dist.mode)
    while True:
        try:
            remainder = dist.sqrt_tail_bound(cutoff)
        except ValueError:
            remainder = math.inf
        if remainder <= tol / 2:
            break
        cutoff = cutoff * 2 if cutoff < 64 else cutoff + 64
    terms = np.sqrt(dist.pmf(np.arange(1, cutoff + 1)))
    value = math.fsum(terms)
    return FunctionalValue(value, remainder + _rounding_allowance(value, cutoff))


def _resolve_threshold(n: int, breakpoint: float | None) -> float:
    if n < 1:
        raise ValueError("sample size n must be >= 1")
    if breakpoint is None:
        return 1.0 / n
    if not breakpoint > 0:
        raise ValueError("breakpoint must be positive")
    return float(breakpoint)


def a_n(dist: Distribution, n: int, breakpoint: float | None = None,
        tol: float = DEFAULT_TOL) -> FunctionalValue:
    """Twice the mass of atoms strictly below the breakpoint (default 1/n)."""
    threshold = _resolve_threshold(n, breakpoint)
    if isinstance(dist, Finite):
        value = 2.0 * math.fsum(p for p in dist.probs if p < threshold)
        return FunctionalValue(value, _rounding_allowance(value, len(dist.probs)))
    lo, hi = dist.level_set(threshold)
    if hi < lo:
        return FunctionalValue(2.0, 0.0)
    value = 2.0 * (float(dist.cdf(lo - 1)) + float(dist.sf(hi)))
    return FunctionalValue(value, 64 * EPS * max(value, 1e-300) + 1e-300)


def _sqrt_mass_sum(dist: Distribution, lo: int, hi: int) -> float:
    """sum_{j=lo..hi} sqrt(p_j) for a contiguous index range."""
    if hi < lo:
        return 0.0
    if isinstance(dist, Geometric):
        rq = math.sqrt(dist.q)
        # sqrt(1-q) * sum_{j=lo}^{hi} rq^(j-1)
        return math.sqrt(1.0 - dist.q) * rq ** (lo - 1) * -math.expm1((hi - lo + 1) * math.log(rq)) / (1.0 - rq)
    if hi - lo + 1 <= _MAX_ENUM:
        return math.fsum(np.sqrt(dist.pmf(np.arange(lo, hi + 1, dtype=np.int64))))
    if isinstance(dist, Zipf):
        a = dist.s / 2.0
        with mpmath.workdps(30):
            total = mpmath.zeta(a, lo) - mpmath.zeta(a, hi + 1)
            return float(total / mpmath.sqrt(dist.normalizer))
    total = 0.0
    parts = []
    for start in range(lo, hi + 1, _MAX_ENUM):
        stop = min(hi, start + _MAX_ENUM - 1)
        parts.append(math.fsum(np.sqrt(dist.pmf(np.arange(start, stop + 1, dtype=np.int64)))))
    total = math.fsum(parts)
    return total


def b_n(dist: Distribution, n: int, breakpoint: float | None = None,
        tol: float = DEFAULT_TOL) -> FunctionalValue:
    """(1/sqrt n) times the sum of sqrt(p_j) over atoms at or above the breakpoint."""
    threshold = _resolve_threshold(n, breakpoint)
    if isinstance(dist, Finite):
        s = math.fsum(math.sqrt(p) for p in dist.probs if p >= threshold)
        value = s / math.sqrt(n)
        return FunctionalValue(value, _rounding_allowance(value, len(dist.probs)))
    lo, hi = dist.level_set(threshold)
    value = _sqrt_mass_sum(dist, lo, hi) / math.sqrt(n)
    return FunctionalValue(value, _rounding_allowance(value, max(hi - lo + 1, 1)))


# -- distances between finite distributions -----------------------------------


def _finite_pair(p: Distribution, q: Distribution) -> tuple[np.ndarray, np.ndarray]:
    if not (isinstance(p, Finite) and isinstance(q, Finite)):
        raise TypeError("distances are defined here for finite distributions only")
    k = max(len(p.probs), len(q.probs))
    a = np.zeros(k)
    b = np.zeros(k)
    a[: len(p.probs)] = p.probs
    b[: len(q.probs)] = q.probs
    return a, b


def l1_distance(p: Distribution, q: Distribution) -> float:
    a, b = _finite_pair(p, q)
    return math.fsum(np.abs(a - b))


SCHEFFE_MAX_SUPPORT = 20


def scheffe_sup(p: Distribution, q: Distribution) -> float:
    """sup over events E of |p(E) - q(E)|, by enumerating all 2^k events."""
    a, b = _finite_pair(p, q)
    k = len(a)
    if k > SCHEFFE_MAX_SUPPORT:
        raise ValueError(f"support of size {k} is too large to enumerate (max {SCHEFFE_MAX_SUPPORT})")
    diff = a - b
    best = 0.0
    for mask in range(1 << k):
        members = [diff[i] for i in range(k) if mask >> i & 1]
        best = max(best, abs(math.fsum(members)))
    return best


# -- slow-rate construction ------------------------------------------------------

_SHRINK = 1.0 - 2.0 ** -20


def construct_slow_rate(rates: Sequence[float] | Iterable[float]) -> SlowRate:
    """Finite distribution whose mass below 1/n is at least r_n for n = 1..N.

    Steps run from n = N down to 1.  Atoms added at step n have size at most
    (1/n)(1 - 2^-20), so they sit below 1/m for every m <= n; each step tops the
    mass below 1/n up to r_n.  The leftover 1 - r_1 becomes one final atom,
    which can only add mass below a threshold.
    """
    rates = tuple(float(r) for r in rates)
    if not rates:
        raise ValueError("need at least one rate")
    if not all(0.0 < r < 1.0 for r in rates):
        raise ValueError("rates must lie in (0, 1)")
    if any(b >= a for a, b in zip(rates, rates[1:])):
        raise ValueError("rates must be strictly decreasing")
    atoms: list[float] = []
    below = 0.0  # mass in atoms placed at steps > n, all of which are < 1/n
    for n in range(len(rates), 0, -1):
        need = rates[n - 1] - below
        size = _SHRINK / n
        while need > 0:
            atom = min(size, need)
            atoms.append(atom)
            need -= atom
        below = max(below, rates[n - 1])
    leftover = 1.0 - math.fsum(atoms)
    if leftover > 0:
        atoms.append(leftover)
    atoms.sort(reverse=True)
    return SlowRate(tuple(atoms), rates=rates)
