import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tvbound.distributions import (
    Finite,
    Geometric,
    Poisson,
    SlowRate,
    Zipf,
    a_n,
    b_n,
    construct_slow_rate,
    from_dict,
    from_json,
    l1_distance,
    nu,
    scheffe_sup,
    truncate,
    uniform,
)

FAMILIES = [Geometric(0.3), Geometric(0.5), Geometric(0.9), Poisson(1.0), Poisson(5.0),
            Poisson(20.0), Zipf(1.5), Zipf(2.0), Zipf(2.5), uniform(3), Finite((0.1, 0.6, 0.3))]


def finite_dists(max_k=12):
    weights = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=max_k).filter(lambda w: sum(w) > 1e-3)
    return weights.map(lambda w: Finite(tuple(x / math.fsum(w) for x in w)) if abs(
        math.fsum(x / math.fsum(w) for x in w) - 1) < 1e-12 else uniform(len(w)))


class TestPmf:
    def test_geometric_closed_form(self):
        assert Geometric(0.5).pmf(3) == 0.125

    def test_finite_beyond_support(self):
        assert Finite((0.2, 0.8)).pmf(3) == 0.0

    def test_zipf_head_matches_high_precision_zeta(self):
        with mpmath.workdps(30):
            expected = float(1 / mpmath.zeta(2))
        assert Zipf(2.0).pmf(1) == pytest.approx(expected, rel=1e-14)
        assert Zipf(2.0).pmf(1) == pytest.approx(6 / math.pi ** 2, rel=1e-14)

    def test_poisson_index_shift(self):
        d = Poisson(2.0)
        assert d.pmf(1) == pytest.approx(math.exp(-2.0), rel=1e-14)
        assert d.pmf(3) == pytest.approx(math.exp(-2.0) * 2.0, rel=1e-13)

    @pytest.mark.parametrize("dist", FAMILIES, ids=repr)
    def test_cdf_sf_consistent(self, dist):
        j = np.arange(0, 60)
        cdf, sf = dist.cdf(j), dist.sf(j)
        np.testing.assert_allclose(cdf + sf, 1.0, atol=1e-14)
        assert np.all(np.diff(cdf) >= -1e-16)
        np.testing.assert_allclose(np.diff(cdf), dist.pmf(j[1:]), atol=1e-14)

    @pytest.mark.parametrize("payload", [
        {"family": "finite", "probs": [0.5, 0.6]},
        {"family": "geometric", "q": 1.0},
        {"family": "poisson", "lambda": 0.0},
        {"family": "zipf", "s": 1.0},
        {"family": "slowrate", "rates": [0.2, 0.3]},
        {"family": "binomial"},
        {"family": "geometric"},
    ])
    def test_invalid_parameters_rejected(self, payload):
        with pytest.raises(ValueError):
            from_dict(payload)


class TestSerialization:
    @pytest.mark.parametrize("text", [
        '{"family":"finite","probs":[0.25,0.75]}',
        '{"family":"geometric","q":0.5}',
        '{"family":"poisson","lambda":2.0}',
        '{"family":"zipf","s":1.5}',
        '{"family":"slowrate","rates":[0.5,0.25]}',
    ])
    def test_round_trip(self, text):
        dist = from_json(text)
        assert json.loads(dist.to_json()) == json.loads(text)

    def test_slowrate_payload_rebuilds_construction(self):
        d = from_json('{"family":"slowrate","rates":[0.9,0.2]}')
        assert isinstance(d, SlowRate)
        assert d.probs == construct_slow_rate([0.9, 0.2]).probs


class TestTruncate:
    def test_geometric(self):
        cert = truncate(Geometric(0.5), 1e-3)
        assert cert.cutoff_index == 10
        assert cert.tail_bound == 2.0 ** -10

    def test_finite(self):
        cert = truncate(Finite((0.5, 0.5)), 0.3)
        assert (cert.cutoff_index, cert.tail_bound) == (2, 0.0)

    def test_zipf_bound_dominates_partial_sum_deficit(self):
        d = Zipf(2.0)
        cert = truncate(d, 1e-6)
        head = math.fsum(d.pmf(np.arange(1, cert.cutoff_index + 1)))
        assert 1.0 - head <= cert.tail_bound <= 1e-6
        assert d.tail_bound(cert.cutoff_index - 1) > 1e-6

    @pytest.mark.parametrize("dist", FAMILIES, ids=repr)
    @pytest.mark.parametrize("tol", [1e-3, 1e-6, 1e-12])
    def test_certificate_covers_true_tail(self, dist, tol):
        cert = truncate(dist, tol)
        assert cert.tail_bound <= tol
        with mpmath.workdps(30):
            if isinstance(dist, Zipf):
                true_tail = float(mpmath.zeta(dist.s, cert.cutoff_index + 1) / mpmath.zeta(dist.s))
            elif isinstance(dist, Geometric):
                true_tail = float(mpmath.mpf(dist.q) ** cert.cutoff_index)
            elif isinstance(dist, Poisson):
                true_tail = float(1 - mpmath.fsum(
                    mpmath.exp(-dist.lam) * mpmath.mpf(dist.lam) ** m / mpmath.factorial(m)
                    for m in range(cert.cutoff_index)))
            else:
                true_tail = 0.0
        assert true_tail <= cert.tail_bound * (1 + 1e-9)

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            truncate(Geometric(0.5), 0.0)


class TestNu:
    def test_uniform(self):
        assert nu(uniform(16)).value == 4.0

    def test_geometric_against_closed_form(self):
        fv = nu(Geometric(0.5), tol=1e-9)
        closed = math.sqrt(0.5) / (1 - math.sqrt(0.5))
        assert closed == pytest.approx(math.sqrt(2) + 1, rel=1e-15)
        assert abs(fv.value - closed) <= fv.error_bound <= 1e-9

    @pytest.mark.parametrize("q", [0.1, 0.3, 0.9, 0.99])
    def test_geometric_other_q(self, q):
        fv = nu(Geometric(q), tol=1e-10)
        assert fv.value == pytest.approx(math.sqrt(1 - q) / (1 - math.sqrt(q)), abs=1e-10)

    def test_zipf_divergent(self):
        fv = nu(Zipf(1.5))
        assert fv.diverges and fv.value is None and fv.error_bound is None
        assert nu(Zipf(2.0)).diverges

    def test_zipf_convergent_against_mpmath(self):
        with mpmath.workdps(30):
            expected = float(mpmath.zeta(1.25) / mpmath.sqrt(mpmath.zeta(2.5)))
        assert nu(Zipf(2.5)).value == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("lam", [0.5, 1.0, 5.0, 30.0])
    def test_poisson_against_long_partial_sum(self, lam):
        d = Poisson(lam)
        with mpmath.workdps(30):
            expected = float(mpmath.fsum(mpmath.sqrt(mpmath.exp(-lam) * mpmath.mpf(lam) ** m / mpmath.factorial(m))
                                         for m in range(400)))
        fv = nu(d, tol=1e-10)
        assert abs(fv.value - expected) <= max(fv.error_bound, 1e-13)

    @given(finite_dists())
    def test_finite_at_most_sqrt_k(self, dist):
        assert nu(dist).value <= math.sqrt(len(dist.probs)) * (1 + 1e-12)


class TestSplitFunctionals:
    def test_uniform_examples(self):
        assert a_n(uniform(4), 10).value == 0.0
        assert b_n(uniform(4), 10).value == pytest.approx(2 / math.sqrt(10), rel=1e-15)

    def test_geometric_examples(self):
        assert a_n(Geometric(0.5), 8).value == 0.25
        direct = math.fsum(math.sqrt(2.0 ** -j) for j in (1, 2, 3)) / math.sqrt(8)
        with mpmath.workdps(30):
            hp = float((mpmath.sqrt(0.5) + mpmath.sqrt(0.25) + mpmath.sqrt(0.125)) / mpmath.sqrt(8))
        assert b_n(Geometric(0.5), 8).value == pytest.approx(direct, rel=1e-14)
        assert b_n(Geometric(0.5), 8).value == pytest.approx(hp, rel=1e-14)

    def test_point_mass(self):
        assert b_n(Finite((1.0,)), 5).value == pytest.approx(1 / math.sqrt(5), rel=1e-15)
        assert a_n(Finite((1.0,)), 5).value == 0.0

    def test_zipf_a_n_against_bruteforce(self):
        d = Zipf(1.5)
        fv = a_n(d, 100, tol=1e-10)
        # independent route: enumerate p_j < 1/100 up to J, bracket the rest by integrals
        zeta_s = float(mpmath.zeta(1.5))
        cutoff = 10 ** 6
        j = np.arange(1, cutoff + 1, dtype=float)
        p = j ** -1.5 / zeta_s
        head = math.fsum(p[p < 0.01])
        tail_lo = (cutoff + 1) ** -0.5 / (0.5 * zeta_s)
        tail_hi = cutoff ** -0.5 / (0.5 * zeta_s)
        assert 2 * (head + tail_lo) - 1e-11 <= fv.value <= 2 * (head + tail_hi) + 1e-11
        assert fv.value == pytest.approx(0.45141195609753217, rel=1e-13)

    def test_equal_to_breakpoint_goes_to_b(self):
        d = Finite((0.25, 0.25, 0.5))
        assert a_n(d, 4).value == 0.0
        assert b_n(d, 4).value == pytest.approx((1 + math.sqrt(0.5)) / 2, rel=1e-15)

    @pytest.mark.parametrize("dist", FAMILIES, ids=repr)
    @pytest.mark.parametrize("n", [1, 3, 10, 100, 1000, 12345])
    def test_against_enumeration(self, dist, n):
        cutoff = truncate(dist, 1e-13).cutoff_index
        if cutoff > 3_000_000:
            cutoff = 3_000_000
        j = np.arange(1, cutoff + 1)
        p = np.asarray(dist.pmf(j))
        tail = float(dist.sf(cutoff))
        small = p < 1.0 / n
        assert not (tail > 0 and p[-1] >= 1.0 / n)
        a_ref = 2 * (math.fsum(p[small]) + tail)
        b_ref = math.fsum(np.sqrt(p[~small])) / math.sqrt(n)
        assert a_n(dist, n).value == pytest.approx(a_ref, abs=1e-12)
        assert b_n(dist, n).value == pytest.approx(b_ref, abs=1e-12)

    @pytest.mark.parametrize("dist", [Poisson(5.0), Zipf(1.5), Geometric(0.7)], ids=repr)
    def test_quarter_breakpoint(self, dist):
        n = 50
        j = np.arange(1, 200_001)
        p = np.asarray(dist.pmf(j))
        small = p < 1 / (4 * n)
        a = a_n(dist, n, breakpoint=1 / (4 * n)).value
        assert a == pytest.approx(2 * (math.fsum(p[small]) + float(dist.sf(200_000))), abs=1e-12)
        b = b_n(dist, n, breakpoint=1 / (4 * n)).value
        assert b == pytest.approx(math.fsum(np.sqrt(p[~small])) / math.sqrt(n), abs=1e-12)

    @given(finite_dists(), st.integers(1, 5000))
    def test_finite_invariants(self, dist, n):
        a, b = a_n(dist, n).value, b_n(dist, n).value
        k = len(dist.probs)
        assert 0 <= a <= 2 + 1e-12
        assert 0 <= b <= min(math.sqrt(k / n), nu(dist).value / math.sqrt(n)) * (1 + 1e-12)

    @pytest.mark.parametrize("dist", [Geometric(0.3), Geometric(0.5), Geometric(0.9),
                                      Zipf(1.5), Zipf(2.0), Zipf(2.5), Poisson(5.0)], ids=repr)
    def test_decay(self, dist):
        vals = [a_n(dist, 2 ** e).value + b_n(dist, 2 ** e).value for e in (4, 8, 12, 16)]
        assert all(x > y for x, y in zip(vals, vals[1:]))
        assert vals[-1] * 10 <= vals[0]

    def test_huge_n_uses_closed_forms(self):
        d = Zipf(1.5)
        n = 2 ** 40
        b = b_n(d, n).value
        lo, hi = d.level_set(1 / n)
        assert hi - lo > 1 << 20
        with mpmath.workdps(30):
            ref = (mpmath.zeta(0.75) - mpmath.zeta(0.75, hi + 1)) / mpmath.sqrt(mpmath.zeta(1.5)) / mpmath.sqrt(n)
        assert b == pytest.approx(float(ref), rel=1e-12)


class TestDistances:
    @pytest.mark.parametrize("p, q, expected", [
        ((0.5, 0.5), (0.5, 0.5), 0.0),
        ((1.0,), (0.5, 0.5), 1.0),
        ((0.2, 0.8), (0.7, 0.3), 1.0),
    ])
    def test_l1(self, p, q, expected):
        assert l1_distance(Finite(p), Finite(q)) == pytest.approx(expected, abs=1e-15)

    def test_scheffe_examples(self):
        assert scheffe_sup(Finite((0.5, 0.5)), Finite((0.5, 0.5))) == 0.0
        assert scheffe_sup(Finite((1.0,)), Finite((0.5, 0.5))) == 0.5

    def test_scheffe_size_guard(self):
        with pytest.raises(ValueError):
            scheffe_sup(uniform(21), uniform(21))

    def test_non_finite_rejected(self):
        with pytest.raises(TypeError):
            l1_distance(Geometric(0.5), uniform(2))

    @settings(max_examples=60)
    @given(finite_dists(10), finite_dists(10))
    def test_scheffe_identity(self, p, q):
        assert 2 * scheffe_sup(p, q) == pytest.approx(l1_distance(p, q), abs=1e-12)


class TestSlowRate:
    def test_single_rate(self):
        d = construct_slow_rate([0.5])
        assert max(d.probs) < 1
        assert a_n(d, 1).value >= 1.0

    def test_harmonic_rates(self):
        rates = [1 / (n + 1) for n in range(1, 9)]
        d = construct_slow_rate(rates)
        for n, r in enumerate(rates, start=1):
            assert a_n(d, n).value >= 2 * r

    def test_two_rates(self):
        d = construct_slow_rate([0.9, 0.2])
        heavy_half = math.fsum(p for p in d.probs if p >= 0.5)
        assert heavy_half <= 1 - 0.2
        assert math.fsum(p for p in d.probs if p >= 1.0) == 0.0

    @pytest.mark.parametrize("rates", [[0.5, 0.5], [0.2, 0.3], [1.0, 0.5], [0.5, 0.0], []])
    def test_rejects_bad_rates(self, rates):
        with pytest.raises(ValueError):
            construct_slow_rate(rates)

    @given(st.lists(st.floats(1e-4, 0.999), min_size=1, max_size=40, unique=True))
    def test_postcondition(self, raw):
        rates = sorted(raw, reverse=True)
        d = construct_slow_rate(rates)
        assert math.fsum(d.probs) == pytest.approx(1.0, abs=1e-12)
        for n, r in enumerate(rates, start=1):
            assert math.fsum(p for p in d.probs if p >= 1 / n) <= 1 - r + 1e-12
