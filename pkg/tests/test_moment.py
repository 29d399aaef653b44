"""Tests for the collision statistic and its threshold decision."""

import math

import numpy as np
import pytest

from idtest.bucketing import bucket_index, build_scheme, exact_bucket_masses
from idtest.distributions import (
    AliasSampler,
    FileSampleStream,
    uniform_pmf,
    validate_pmf,
    zipf_pmf,
)
from idtest.errors import BadParams, DimensionMismatch
from idtest.moment import (
    CollisionStats,
    collect_counts,
    moment_decide,
    moment_sample_size,
    moment_threshold,
    sample_pairs,
)
from idtest.rng import TAG_TRIAL, seed_sequence
from idtest.tester import QueryCounter


class TestCollectCounts:
    def test_small_example(self):
        # [7, 7, 9]: counts {7: 2, 9: 1}; C(2,2) + C(1,2) = 1 collision
        n = 12
        p = uniform_pmf(n)
        s = build_scheme(n, 2.0, 1.0)
        stream = FileSampleStream(np.array([7, 7, 9]), n=n)
        stats = collect_counts(stream, p, s, 3)
        assert stats.counts == {7: 2, 9: 1}
        j = bucket_index(s, 1.0 / n)
        assert stats.per_bucket_stat[j] == pytest.approx(1.0)
        assert stats.per_bucket_stat.sum() == pytest.approx(1.0)

    def test_all_distinct_no_collisions(self):
        n = 50
        p = uniform_pmf(n)
        s = build_scheme(n, 2.0, 1.0)
        stream = FileSampleStream(np.arange(20), n=n)
        stats = collect_counts(stream, p, s, 20)
        assert np.all(stats.per_bucket_stat == 0.0)

    def test_all_equal_maximal_collisions(self):
        n = 10
        p = uniform_pmf(n)
        s = build_scheme(n, 2.0, 1.0)
        S = 15
        stream = FileSampleStream(np.full(S, 4), n=n)
        stats = collect_counts(stream, p, s, S)
        j = bucket_index(s, 0.1)
        assert stats.per_bucket_stat[j] == sample_pairs(S)
        assert sum(stats.counts.values()) == S

    def test_occurrences_sum_to_s(self):
        p = zipf_pmf(80)
        s = build_scheme(80, 2.0, 1.0)
        stats = collect_counts(AliasSampler(p, 3), p, s, 500)
        assert sum(stats.counts.values()) == 500
        assert len(stats.counts) <= 500  # sparse: never O(n)

    def test_one_query_per_distinct_index(self):
        p = uniform_pmf(30)
        s = build_scheme(30, 2.0, 1.0)
        counter = QueryCounter(p)
        stream = FileSampleStream(np.array([1, 1, 2, 2, 2, 9]), n=30)
        collect_counts(stream, counter, s, 6)
        assert counter.total == 3  # distinct indices only
        assert counter.distinct_count == 3

    def test_precondition(self):
        p = uniform_pmf(4)
        s = build_scheme(4, 2.0, 1.0)
        with pytest.raises(BadParams):
            collect_counts(AliasSampler(p, 0), p, s, 1)

    def test_unbiasedness_five_standard_errors(self):
        # E[stat_j] = C(S,2) * sum_{i in R_j} q_i^2, checked over 1e4 trials
        n, S, trials = 100, 60, 10**4
        p = zipf_pmf(n)
        s = build_scheme(n, 2.0, 1.0)
        q = validate_pmf(np.random.default_rng(12).dirichlet(np.ones(n)))
        from idtest.bucketing import bucket_indices

        buckets = bucket_indices(s, p.probs)
        expected = sample_pairs(S) * np.bincount(
            buckets, weights=q.probs**2, minlength=s.k + 1
        )
        proto = AliasSampler(q, 0)
        stats_matrix = np.empty((trials, s.k + 1))
        for t in range(trials):
            stream = proto.spawn(seed_sequence(41, TAG_TRIAL, t))
            stats_matrix[t] = collect_counts(stream, p, s, S).per_bucket_stat
        mean = stats_matrix.mean(axis=0)
        se = stats_matrix.std(axis=0, ddof=1) / math.sqrt(trials)
        occupied = expected > 0
        assert np.all(np.abs(mean - expected)[occupied] <= 5 * se[occupied])


class TestMomentDecide:
    def make(self, n=100):
        p = uniform_pmf(n)
        s = build_scheme(n, 0.5, 100.0)
        masses = exact_bucket_masses(s, p)
        return p, s, masses

    def stats_with(self, s, bucket, value, S=100):
        stat = np.zeros(s.k + 1)
        stat[bucket] = value
        return CollisionStats(total_samples=S, counts={}, per_bucket_stat=stat)

    def test_zero_stats_accept(self):
        _, s, masses = self.make()
        stats = CollisionStats(100, {}, np.zeros(s.k + 1))
        assert moment_decide(stats, masses, s, 0.5).accept

    def test_exact_threshold_accepts(self):
        # rejection requires strict exceedance
        _, s, masses = self.make()
        j = int(np.nonzero(masses)[0][0])
        thr = moment_threshold(s, j, masses[j], 0.5, S=100)
        report = moment_decide(self.stats_with(s, j, thr), masses, s, 0.5)
        assert report.accept
        nudged = self.stats_with(s, j, thr * (1 + 1e-9))
        assert not moment_decide(nudged, masses, s, 0.5).accept

    def test_small_mass_buckets_skipped(self):
        _, s, _ = self.make()
        guard = 0.5 / (4 * s.k + 4)
        masses = np.zeros(s.k + 1)
        masses[5] = guard  # not strictly above the guard
        masses[7] = guard * 1.01
        report = moment_decide(
            self.stats_with(s, 5, 1e9), masses, s, 0.5
        )
        assert report.accept  # bucket 5 skipped, huge stat ignored
        assert not report.tested[5]
        assert report.tested[7]

    def test_bucket_zero_always_skipped(self):
        _, s, _ = self.make()
        masses = np.zeros(s.k + 1)
        masses[0] = 1.0
        report = moment_decide(self.stats_with(s, 0, 1e9), masses, s, 0.5)
        assert report.accept
        assert not report.tested[0]

    def test_monotonicity_more_collisions_never_unreject(self):
        _, s, masses = self.make()
        j = int(np.nonzero(masses)[0][0])
        thr = moment_threshold(s, j, masses[j], 0.5, S=100)
        lo = moment_decide(self.stats_with(s, j, thr * 1.5), masses, s, 0.5)
        hi = moment_decide(self.stats_with(s, j, thr * 3.0), masses, s, 0.5)
        assert not lo.accept and not hi.accept
        assert np.all(lo.rejected <= hi.rejected)

    def test_slack_scales_threshold(self):
        _, s, masses = self.make()
        j = int(np.nonzero(masses)[0][0])
        thr = moment_threshold(s, j, masses[j], 0.5, S=100)
        stats = self.stats_with(s, j, thr * 1.5)
        assert not moment_decide(stats, masses, s, 0.5, slack=1.0).accept
        assert moment_decide(stats, masses, s, 0.5, slack=2.0).accept

    def test_dimension_mismatch(self):
        _, s, _ = self.make()
        stats = CollisionStats(10, {}, np.zeros(s.k + 1))
        with pytest.raises(DimensionMismatch):
            moment_decide(stats, np.zeros(s.k), s, 0.5)

    def test_matching_q_accepts_with_high_probability(self):
        # p = q = uniform: expected stat sits below the threshold by the
        # (1 + eps/4) slack; accept in >= 95% of 200 seeded trials
        n = 400
        p = uniform_pmf(n)
        s = build_scheme(n, 0.5, 100.0)
        masses = exact_bucket_masses(s, p)
        S = moment_sample_size(n, 0.5, c4=3.0)
        proto = AliasSampler(p, 0)
        accepts = 0
        for t in range(200):
            stream = proto.spawn(seed_sequence(43, TAG_TRIAL, t))
            stats = collect_counts(stream, p, s, S)
            accepts += moment_decide(stats, masses, s, 0.5).accept
        assert accepts >= 190

    def test_sample_size_formula(self):
        assert moment_sample_size(400, 0.5, 3.0) == math.ceil(
            3.0 * 20.0 * math.log(401) / 0.25
        )
