"""Monte Carlo estimation of J_n and empirical falsification of the tail bounds.

Trials are generated in fixed blocks whose boundaries depend only on
(trials, n), and every trial draws from its own counter-based stream, so the
per-trial statistics are identical no matter how blocks are spread over
worker processes.  Aggregation uses :func:`math.fsum` over trial-ordered
values.
"""
from __future__ import annotations

import functools
import itertools
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import beta

from . import bounds as bd
from .distributions import Distribution, Finite, Geometric, Poisson, Zipf, from_json, nu, truncate
from .rng import MUTATION_DOMAIN, check_seed, mix64, open_unit, raw_block, trial_keys

ZIPF_TABLE = 1 << 16
ZIPF_CAP = 1 << 62
_BLOCK_CELLS = 1 << 20
_DENSE_MAX_K = 4096


# -- sampling --------------------------------------------------------------------


class _Sampler:
    """Inverse-CDF map from uniforms in (0, 1] to support indices.

    Index j is returned when sf(j) < v <= sf(j - 1).
    """

    def __init__(self, dist: Distribution):
        self.dist = dist
        self.bias = 0.0
        self.table = None
        if isinstance(dist, Finite):
            self.table = np.asarray(dist.sf(np.arange(len(dist.probs) + 1)))
        elif isinstance(dist, Poisson):
            cert = truncate(dist, 1e-18)
            self.table = np.asarray(dist.sf(np.arange(cert.cutoff_index + 1)))
            self.bias = float(self.table[-1])
        elif isinstance(dist, Zipf):
            self.table = np.asarray(dist.sf(np.arange(ZIPF_TABLE + 1)))
            self.bias = float(dist.sf(ZIPF_CAP))
        elif not isinstance(dist, Geometric):
            raise TypeError(f"cannot sample from {dist!r}")
        if self.table is not None:
            self._neg = -self.table

    def __call__(self, v: np.ndarray) -> np.ndarray:
        if isinstance(self.dist, Geometric):
            x = np.floor(np.log(v) / math.log(self.dist.q)).astype(np.int64) + 1
            return np.maximum(x, 1)
        x = np.searchsorted(self._neg, -v, side="right").astype(np.int64)
        if isinstance(self.dist, Zipf):
            tail = v <= self.table[-1]
            if tail.any():
                x[tail] = self._zipf_tail(v[tail])
        else:
            np.minimum(x, len(self.table) - 1, out=x)
        return x

    def _zipf_tail(self, v: np.ndarray) -> np.ndarray:
        lo = np.full(v.shape, ZIPF_TABLE, dtype=np.int64)  # sf(lo) >= v
        hi = np.full(v.shape, ZIPF_CAP, dtype=np.int64)
        capped = self.dist.sf(ZIPF_CAP) >= v
        for _ in range(64):
            active = hi - lo > 1
            if not active.any():
                break
            mid = lo + (hi - lo) // 2
            go_right = np.asarray(self.dist.sf(mid)) >= v
            lo = np.where(active & go_right, mid, lo)
            hi = np.where(active & ~go_right, mid, hi)
        return np.where(capped, ZIPF_CAP, hi)


@functools.lru_cache(maxsize=32)
def _sampler_for(dist_json: str) -> _Sampler:
    return _Sampler(from_json(dist_json))


def _sampler(dist: Distribution) -> _Sampler:
    return _sampler_for(dist.to_json())


def _draw_block(dist: Distribution, n: int, master_seed: int, first: int, count: int) -> np.ndarray:
    keys = trial_keys(master_seed, np.arange(first, first + count))
    return _sampler(dist)(open_unit(raw_block(keys, n)))


@dataclass(frozen=True)
class SampleCounts:
    n: int
    counts: dict[int, int]
    sampling_bias: float = 0.0

    def __post_init__(self):
        if any(c < 1 for c in self.counts.values()):
            raise ValueError("zero counts must be omitted")
        if sum(self.counts.values()) != self.n:
            raise ValueError("counts must sum to n")


def draw(dist: Distribution, n: int, stream_seed: int) -> SampleCounts:
    """n iid draws from ``dist`` using the stream keyed by ``stream_seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = _sampler(dist)(open_unit(raw_block(np.array([check_seed(stream_seed)], dtype=np.uint64), n)))[0]
    values, counts = np.unique(x, return_counts=True)
    return SampleCounts(n, {int(v): int(c) for v, c in zip(values, counts)}, _sampler(dist).bias)


# -- single-sample statistics ----------------------------------------------------


def _seen(sample: SampleCounts, dist: Distribution):
    idx = np.array(sorted(sample.counts), dtype=np.int64)
    freq = np.array([sample.counts[j] for j in idx], dtype=float) / sample.n
    return idx, freq, np.asarray(dist.pmf(idx), dtype=float)


def j_n(sample: SampleCounts, dist: Distribution) -> float:
    """||p_hat - p||_1, with every unseen atom accounted for by 1 - sum_seen p_j."""
    _, freq, p = _seen(sample, dist)
    return math.fsum(np.abs(freq - p)) + max(0.0, 1.0 - math.fsum(p))


def _max_unseen_pmf(seen: Iterable[int], dist: Distribution) -> float:
    seen = set(seen)
    k = dist.support_size
    if k is not None:
        unseen = [j for j in range(1, k + 1) if j not in seen]
        return float(max(dist.pmf(np.array(unseen)))) if unseen else 0.0
    # unimodal: everything left of the mode, plus the first gap right of it
    m = dist.mode
    cands = [j for j in range(1, m) if j not in seen]
    j = m
    while j in seen:
        j += 1
    cands.append(j)
    return float(max(dist.pmf(np.array(cands))))


def linf_stat(sample: SampleCounts, dist: Distribution) -> float:
    idx, freq, p = _seen(sample, dist)
    return max(float(np.max(np.abs(freq - p))), _max_unseen_pmf(idx.tolist(), dist))


def ks_stat(sample: SampleCounts, dist: Distribution) -> float:
    """sup_i |F_hat(i) - F(i)|, evaluated exactly.

    F_hat only jumps at seen indices and F is monotone, so the supremum over
    each constant stretch of F_hat sits at one of its ends: a seen index or
    the index just before one.
    """
    idx, freq, _ = _seen(sample, dist)
    fhat = np.cumsum(freq)
    fhat[-1] = 1.0
    before = np.concatenate([[0.0], fhat[:-1]])
    at = np.abs(fhat - np.asarray(dist.cdf(idx)))
    prior = np.abs(before - np.asarray(dist.cdf(idx - 1)))
    return float(max(at.max(), prior.max()))


def h_function(sample: SampleCounts, dist: Distribution) -> float:
    """sum_j |n p_j - count_j| = n J_n."""
    _, freq, p = _seen(sample, dist)
    n = sample.n
    return math.fsum(np.abs(freq * n - p * n)) + n * max(0.0, 1.0 - math.fsum(p))


# -- batched statistics ------------------------------------------------------------


def _stats_dense(x: np.ndarray, dist: Finite) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t, n = x.shape
    k = len(dist.probs)
    rows = np.repeat(np.arange(t, dtype=np.int64), n)
    counts = np.bincount(rows * k + (x.ravel() - 1), minlength=t * k).reshape(t, k)
    diff = counts / n - dist._p
    jn = np.abs(diff).sum(axis=1)
    linf = np.abs(diff).max(axis=1)
    ks = np.abs(np.cumsum(diff, axis=1)).max(axis=1)
    return jn, linf, ks


def _stats_sparse(x: np.ndarray, dist: Distribution) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t, n = x.shape
    flat = np.sort(x, axis=1).ravel()
    new_run = np.ones(flat.size, dtype=bool)
    new_run[1:] = flat[1:] != flat[:-1]
    new_run[::n] = True
    starts = np.flatnonzero(new_run)
    counts = np.diff(np.append(starts, flat.size))
    vals = flat[starts]
    rows = starts // n
    row_first = np.searchsorted(rows, np.arange(t))

    p = np.asarray(dist.pmf(vals), dtype=float)
    dev = np.abs(counts / n - p)
    seen_mass = np.bincount(rows, weights=p, minlength=t)
    jn = np.bincount(rows, weights=dev, minlength=t) + np.maximum(0.0, 1.0 - seen_mass)

    width = dist.mode + n + 1
    seen = np.zeros((t, width), dtype=bool)
    inside = vals <= width
    seen[rows[inside], vals[inside] - 1] = True
    window_p = np.asarray(dist.pmf(np.arange(1, width + 1)))
    unseen_max = np.where(seen, 0.0, window_p[None, :]).max(axis=1)
    linf = np.maximum(np.maximum.reduceat(dev, row_first), unseen_max)

    cum = np.cumsum(counts)
    offset = np.concatenate([[0], cum[row_first[1:] - 1]])
    fhat_at = (cum - offset[rows]) / n
    fhat_at[np.append(row_first[1:] - 1, counts.size - 1)] = 1.0
    fhat_before = fhat_at - counts / n
    fhat_before[row_first] = 0.0
    gap = np.maximum(np.abs(fhat_at - np.asarray(dist.cdf(vals))),
                     np.abs(fhat_before - np.asarray(dist.cdf(vals - 1))))
    ks = np.maximum.reduceat(gap, row_first)
    return jn, linf, ks


def batch_stats(x: np.ndarray, dist: Distribution, dense: bool | None = None):
    """(J_n, l_inf, KS) for each row of a (trials, n) index matrix."""
    if dense is None:
        dense = isinstance(dist, Finite) and len(dist.probs) <= _DENSE_MAX_K
    return _stats_dense(x, dist) if dense else _stats_sparse(x, dist)


def _block_size(n: int, dist: Distribution) -> int:
    width = dist.support_size or (dist.mode + n + 1)
    return max(1, _BLOCK_CELLS // max(n, width))


def _run_block(args) -> np.ndarray:
    dist_json, n, master_seed, first, count = args
    dist = from_json(dist_json)
    x = _draw_block(dist, n, master_seed, first, count)
    return np.stack(batch_stats(x, dist))


def simulate_stats(dist: Distribution, n: int, trials: int, master_seed: int,
                   workers: int = 1) -> np.ndarray:
    """Array of shape (3, trials): J_n, l_inf and KS statistic per trial."""
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    master_seed = check_seed(master_seed)
    size = _block_size(n, dist)
    jobs = [(dist.to_json(), n, master_seed, first, min(size, trials - first))
            for first in range(0, trials, size)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(job) for job in jobs]
    return np.concatenate(parts, axis=1)


# -- estimation ------------------------------------------------------------------


def clopper_pearson(hits: int, trials: int, alpha: float) -> tuple[float, float]:
    """Exact two-sided (1 - alpha) interval for a binomial proportion."""
    lo = 0.0 if hits == 0 else float(beta.ppf(alpha / 2, hits, trials - hits + 1))
    hi = 1.0 if hits == trials else float(beta.ppf(1 - alpha / 2, hits + 1, trials - hits))
    return lo, hi


@dataclass(frozen=True)
class TailEstimate:
    eps: float
    hits: int
    p_hat: float
    lcl: float
    ucl: float


def tail_estimate(values: np.ndarray, eps: float, alpha: float) -> TailEstimate:
    hits = int(np.count_nonzero(values > eps))
    lcl, ucl = clopper_pearson(hits, values.size, alpha)
    return TailEstimate(float(eps), hits, hits / values.size, lcl, ucl)


@dataclass(frozen=True)
class SimulationSummary:
    trials: int
    master_seed: int
    n: int
    mean_jn: float
    stderr: float
    alpha: float
    tail_estimates: tuple[TailEstimate, ...]
    linf_tails: tuple[TailEstimate, ...] = ()
    ks_tails: tuple[TailEstimate, ...] = ()
    sampling_bias: float = 0.0


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    mean = math.fsum(values) / values.size
    var = math.fsum((values - mean) ** 2) / (values.size - 1)
    return mean, math.sqrt(var / values.size)


def estimate(dist: Distribution, n: int, trials: int, master_seed: int,
             eps_list: Sequence[float], alpha: float = 0.05, workers: int = 1,
             min_trials: int = 100) -> SimulationSummary:
    """Mean of J_n with its standard error and Clopper-Pearson tail intervals."""
    if trials < min_trials:
        raise ValueError(f"need at least {min_trials} trials")
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    stats = simulate_stats(dist, n, trials, master_seed, workers)
    jn, linf, ks = stats
    mean, se = _mean_stderr(jn)
    return SimulationSummary(
        trials=trials, master_seed=master_seed, n=n, mean_jn=mean, stderr=se, alpha=alpha,
        tail_estimates=tuple(tail_estimate(jn, e, alpha) for e in eps_list),
        linf_tails=tuple(tail_estimate(linf, e, alpha) for e in eps_list),
        ks_tails=tuple(tail_estimate(ks, e, alpha) for e in eps_list),
        sampling_bias=_sampler(dist).bias,
    )


# -- exhaustive oracles -----------------------------------------------------------


def exact_jn_distribution(dist: Finite, n: int) -> dict[float, float]:
    """Law of J_n by enumerating all k^n sample sequences."""
    if not isinstance(dist, Finite):
        raise TypeError("exhaustive enumeration needs a finite distribution")
    k = len(dist.probs)
    if k ** n > 5 ** 8:
        raise ValueError("k^n too large to enumerate")
    law: dict[float, list[float]] = {}
    for seq in itertools.product(range(k), repeat=n):
        weight = math.prod(dist.probs[i] for i in seq)
        if weight == 0.0:
            continue
        counts = [0] * k
        for i in seq:
            counts[i] += 1
        jn = math.fsum(abs(c / n - p) for c, p in zip(counts, dist.probs))
        law.setdefault(round(jn, 12), []).append(weight)
    return {v: math.fsum(w) for v, w in sorted(law.items())}


def exact_mean_jn(dist: Finite, n: int) -> float:
    return math.fsum(v * w for v, w in exact_jn_distribution(dist, n).items())


# -- Lipschitz property ------------------------------------------------------------


def _h_rows(x: np.ndarray, dist: Distribution) -> np.ndarray:
    """h = sum_j |n p_j - count_j| per row, kept on the count scale."""
    t, n = x.shape
    flat = np.sort(x, axis=1).ravel()
    new_run = np.ones(flat.size, dtype=bool)
    new_run[1:] = flat[1:] != flat[:-1]
    new_run[::n] = True
    starts = np.flatnonzero(new_run)
    counts = np.diff(np.append(starts, flat.size))
    rows = starts // n
    p = np.asarray(dist.pmf(flat[starts]), dtype=float)
    seen_mass = np.bincount(rows, weights=p, minlength=t)
    return (np.bincount(rows, weights=np.abs(counts - n * p), minlength=t)
            + n * np.maximum(0.0, 1.0 - seen_mass))


def lipschitz_check(dist: Distribution, n: int, trials: int, master_seed: int) -> float:
    """Largest |h(x) - h(y)| seen when one coordinate of a sample is redrawn."""
    if trials < 1 or n < 1:
        raise ValueError("n and trials must be positive")
    master_seed = check_seed(master_seed)
    sampler = _sampler(dist)
    worst = 0.0
    size = _block_size(n, dist)
    for first in range(0, trials, size):
        count = min(size, trials - first)
        idx = np.arange(first, first + count)
        x = _draw_block(dist, n, master_seed, first, count)
        extra = open_unit(raw_block(trial_keys(master_seed, idx, MUTATION_DOMAIN), 2))
        coord = np.minimum((extra[:, 0] * n).astype(np.int64), n - 1)
        y = x.copy()
        y[np.arange(count), coord] = sampler(extra[:, 1])
        worst = max(worst, float(np.abs(_h_rows(x, dist) - _h_rows(y, dist)).max()))
    return worst


def lipschitz_exhaustive(dist: Finite, n: int) -> float:
    """Largest increment of h over every sample and every single-coordinate change."""
    if not isinstance(dist, Finite):
        raise TypeError("exhaustive check needs a finite distribution")
    k = len(dist.probs)
    x = np.array(list(itertools.product(range(1, k + 1), repeat=n)), dtype=np.int64)
    hx = _h_rows(x, dist)
    worst = 0.0
    for i in range(n):
        for v in range(1, k + 1):
            y = x.copy()
            y[:, i] = v
            worst = max(worst, float(np.abs(hx - _h_rows(y, dist)).max()))
    return worst


# -- falsification harness ---------------------------------------------------------

SIM_COLUMNS = ("distribution_id", "n", "trials", "master_seed", "mean_jn", "stderr", "eps",
               "tail_hat", "tail_ucl", "tail_lcl", "best_bound_name", "best_bound_value",
               "violation_flag")


@dataclass(frozen=True)
class VerificationRow:
    distribution_id: str
    n: int
    trials: int
    master_seed: int
    mean_jn: float
    stderr: float
    eps: float
    tail_hat: float
    tail_ucl: float
    tail_lcl: float
    best_bound_name: str
    best_bound_value: float
    violation_flag: bool
    violations: tuple[str, ...] = ()
    mean_lower: float = 0.0
    mean_upper: float = math.inf

    def csv_row(self) -> dict:
        return {c: getattr(self, c) for c in SIM_COLUMNS}


def cell_seed(master_seed: int, distribution_id: str, n: int) -> int:
    """Seed for one (distribution, n) cell of a verification run."""
    return mix64(check_seed(master_seed) ^ mix64(zlib.crc32(distribution_id.encode()) << 32 | n))


def mean_bracket(dist: Distribution, n: int, scale: int = 1) -> tuple[float, float]:
    """(lower, upper) bounds on E J_n: the (A_n + B_n)/4 - 1/sqrt(n) floor and the tightest ceiling."""
    a, b = bd.ab_values(dist, n, scale)
    a1, b1 = bd.ab_values(dist, n, 1) if scale != 1 else (a, b)
    uppers = [a + b]
    k = dist.support_size
    if k is not None:
        uppers.append(math.sqrt(k / n))
    nu_value = float(nu(dist))
    if math.isfinite(nu_value):
        uppers.append(nu_value / math.sqrt(n))
    lower = bd.mean_lower_bound(a1, b1, n) if n >= 2 else 0.0
    return lower, min(uppers)


def verify_bounds(dist: Distribution, n_list: Sequence[int], eps_list: Sequence[float],
                  trials: int, master_seed: int, alpha: float = 0.05, scale: int = 1,
                  workers: int = 1, distribution_id: str | None = None) -> list[VerificationRow]:
    """Compare empirical tails of J_n, l_inf and KS against every applicable bound.

    A bound is flagged as violated only when the lower confidence limit of the
    empirical tail exceeds it; the mean of J_n is flagged when its 3-sigma
    window misses the bracket from :func:`mean_bracket`.
    """
    name = distribution_id or dist.name
    nu_value = float(nu(dist))
    rows = []
    for n in n_list:
        seed = cell_seed(master_seed, name, n)
        summary = estimate(dist, n, trials, seed, eps_list, alpha, workers)
        lower, upper = mean_bracket(dist, n, scale)
        mean_bad = (summary.mean_jn - 3 * summary.stderr > upper
                    or summary.mean_jn + 3 * summary.stderr < lower)
        for jt, lt, kt in zip(summary.tail_estimates, summary.linf_tails, summary.ks_tails):
            violated = []
            for res in bd.all_bounds(dist, n, jt.eps, scale, nu_value):
                if not res.applicable or res.bound_name == "mcdiarmid_centered":
                    continue
                lcl = {"dkw_sup": kt.lcl, "linf": lt.lcl}.get(res.bound_name, jt.lcl)
                if lcl > res.value:
                    violated.append(res.bound_name)
            if mean_bad:
                violated.append("mean_bracket")
            best = bd.best_bound(dist, n, jt.eps, scale, nu_value)
            rows.append(VerificationRow(
                name, n, trials, seed, summary.mean_jn, summary.stderr, jt.eps,
                jt.p_hat, jt.ucl, jt.lcl, best.bound_name, best.value, bool(violated),
                tuple(violated), lower, upper))
    return rows
