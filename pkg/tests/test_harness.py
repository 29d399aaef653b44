"""Tests for the statistical harness: trials, comparator checks, scaling,
and calibration."""

import numpy as np
import pytest

from idtest.bucketing import build_scheme, exact_bucket_masses
from idtest.distributions import zipf_pmf
from idtest.errors import BadParams, CalibrationFailed
from idtest.harness import (
    BaselineConfig,
    baseline_identity_test,
    calibrate_constants,
    fit_loglog_slope,
    lemma_check,
    make_instance,
    run_trials,
    scaling_experiment,
    shifted_bucket_pair,
    wilson_interval,
)
from idtest.rng import TAG_TRIAL, seed_sequence
from idtest.distributions import AliasSampler
from idtest.tester import TesterConfig


class TestWilsonInterval:
    def test_known_value(self):
        # hand-computed Wilson interval at z = 1.96 for 200/300
        lo, hi = wilson_interval(200, 300)
        assert lo == pytest.approx(0.6110, abs=2e-3)
        assert hi == pytest.approx(0.7185, abs=2e-3)

    def test_brackets_the_estimate(self):
        for s, t in [(0, 50), (50, 50), (17, 123), (299, 300)]:
            lo, hi = wilson_interval(s, t)
            # 1e-12 absorbs float rounding at the 0 and 1 boundaries
            assert 0.0 <= lo <= s / t + 1e-12
            assert s / t - 1e-12 <= hi <= 1.0

    def test_zero_successes(self):
        lo, _ = wilson_interval(0, 100)
        assert lo <= 1e-12

    def test_bad_inputs(self):
        with pytest.raises(BadParams):
            wilson_interval(1, 0)
        with pytest.raises(BadParams):
            wilson_interval(5, 4)


class TestRunTrials:
    def test_minimum_trial_count(self):
        inst = make_instance("identical-uniform", 64, seed=0)
        with pytest.raises(BadParams):
            run_trials(inst, TesterConfig(eps=0.5), trials=10, master_seed=0)

    def test_deterministic_given_seed(self):
        inst = make_instance("identical-uniform", 128, seed=0)
        cfg = TesterConfig(eps=0.5)
        a = run_trials(inst, cfg, trials=30, master_seed=5).to_dict()
        b = run_trials(inst, cfg, trials=30, master_seed=5).to_dict()
        assert a == b

    def test_jobs_do_not_change_results(self):
        inst = make_instance("identical-uniform", 128, seed=0)
        cfg = TesterConfig(eps=0.5)
        seq = run_trials(inst, cfg, trials=32, master_seed=6)
        par = run_trials(inst, cfg, trials=32, master_seed=6, jobs=2)
        assert seq.to_dict() == par.to_dict()

    def test_report_fields(self):
        inst = make_instance("random-half", 64, seed=1)
        rep = run_trials(inst, TesterConfig(eps=0.5), trials=40, master_seed=7)
        assert rep.trials == 40
        assert 0 <= rep.accepts <= 40
        assert rep.wilson[0] <= rep.accept_rate <= rep.wilson[1]
        assert rep.audits_ok
        assert rep.mean_q_samples > 0


class TestShiftedBucketPair:
    def test_exact_bucket_distance(self):
        n = 400
        scheme = build_scheme(n, 2.0, 1.0)
        base = zipf_pmf(n)
        q = shifted_bucket_pair(base, scheme, 0.05, 0, 4)
        P = exact_bucket_masses(scheme, base)
        Q = exact_bucket_masses(scheme, base, weight_pmf=q)
        assert float(np.abs(P - Q).sum()) == pytest.approx(0.1, abs=1e-12)

    def test_donor_too_small(self):
        n = 100
        scheme = build_scheme(n, 2.0, 1.0)
        base = zipf_pmf(n)
        masses = exact_bucket_masses(scheme, base)
        small = int(np.argmin(np.where(masses > 0, masses, np.inf)))
        with pytest.raises(BadParams):
            shifted_bucket_pair(base, scheme, masses[small] * 1.5, small, 0)


class TestLemmaCheck:
    def test_structure_and_rates_small(self):
        rep = lemma_check(100, 0.4, trials=45, master_seed=0)
        assert rep["k"] >= 1
        for fam in ("case1", "case2"):
            f = rep[fam]
            assert f["trials"] >= 30
            assert 0.0 <= f["rate"] <= 1.0
            assert f["rate"] >= 0.8  # loose gate; acceptance pins 0.85
        assert "gap" in rep
        assert rep["gap"]["bucket_l1"] == pytest.approx(0.2, abs=1e-9)

    def test_deterministic(self):
        a = lemma_check(100, 0.4, trials=45, master_seed=3)
        b = lemma_check(100, 0.4, trials=45, master_seed=3)
        assert a == b

    def test_jobs_do_not_change_results(self):
        a = lemma_check(100, 0.4, trials=40, master_seed=4, jobs=2)
        b = lemma_check(100, 0.4, trials=40, master_seed=4)
        assert a == b

    def test_oracle_gate_on_case2(self):
        rep = lemma_check(100, 0.4, trials=45, master_seed=1, include_gap=False)
        for dist in rep["case2"]["bucket_l1"].values():
            assert dist >= 0.4 - 1e-9

    def test_oracle_feasibility_precondition(self):
        with pytest.raises(BadParams):
            lemma_check(10**5, 0.1, trials=45)


class TestBaseline:
    def test_verdict_agreement_on_reference_suite(self):
        # explicit-mass baseline and the sublinear pipeline agree on the
        # extreme instances when given matching collision sample sizes
        n = 400
        bcfg = BaselineConfig(m1=2000, S=1439)
        for kind, want in [("identical-uniform", "accept"), ("random-half", "reject")]:
            inst = make_instance(kind, n, seed=2)
            agree = 0
            for t in range(25):
                stream = AliasSampler(inst.q, seed_sequence(50 + t, TAG_TRIAL, 0))
                res = baseline_identity_test(inst.p, stream, 0.5, 100.0, bcfg)
                agree += res["decision"] == want
            assert agree >= 23

    def test_baseline_counts_linear_scan(self):
        inst = make_instance("identical-uniform", 512, seed=0)
        stream = AliasSampler(inst.q, seed_sequence(1, TAG_TRIAL, 0))
        res = baseline_identity_test(inst.p, stream, 0.5, 100.0, BaselineConfig())
        assert res["p_queries_used"] == 512


class TestScalingExperiment:
    def test_tiny_grid(self):
        out = scaling_experiment([256, 1024], 0.5, trials_per_point=1, master_seed=0)
        assert len(out["rows"]) == 2
        assert out["slope_total"] is not None
        for row in out["rows"]:
            assert row["q_samples"] > 0 and row["p_queries"] > 0
            assert row["baseline_total"] >= row["n"]

    def test_singleton_grid_no_fit(self):
        out = scaling_experiment([512], 0.5, trials_per_point=1, master_seed=0)
        assert len(out["rows"]) == 1
        assert out["slope_total"] is None

    def test_empty_grid(self):
        with pytest.raises(BadParams):
            scaling_experiment([], 0.5)

    def test_fit_helper(self):
        ns = [2**e for e in range(8, 13)]
        assert fit_loglog_slope(ns, [n for n in ns]) == pytest.approx(1.0)
        assert fit_loglog_slope(ns, [n**0.5 for n in ns]) == pytest.approx(0.5)
        assert fit_loglog_slope([64], [10]) is None


class TestCalibrateConstants:
    def test_passing_defaults_returned_unchanged(self):
        # a trivially satisfiable target keeps the defaults
        result = calibrate_constants(
            target_rates={"accept_identical": 0.0},
            search_space={"c4": [TesterConfig(eps=0.5).c4, 8.0]},
            n=64,
            trials=30,
            master_seed=0,
        )
        assert result["recommended"]["c4"] == TesterConfig(eps=0.5).c4

    def test_smallest_passing_c4(self):
        # defaults excluded from the space: the cheapest passing point wins
        result = calibrate_constants(
            target_rates={"accept_identical": 0.0},
            search_space={"c4": [1.0, 2.0, 4.0, 8.0]},
            n=64,
            trials=30,
            master_seed=0,
        )
        assert result["recommended"]["c4"] == 1.0

    def test_empty_space_fails(self):
        with pytest.raises(CalibrationFailed):
            calibrate_constants(
                target_rates={"accept_identical": 0.0},
                search_space={"c4": []},
                n=64,
                trials=30,
            )

    def test_unreachable_target_fails(self):
        with pytest.raises(CalibrationFailed):
            calibrate_constants(
                target_rates={"reject_random_half": 1.1},  # impossible
                search_space={"c4": [1.0]},
                n=64,
                trials=30,
            )
