"""The composed sublinear identity tester.

Pipeline: build the bucket scheme, run the coarse bucket-mass comparator
with delta = eps / C_prime, reject immediately on Case 2, otherwise run
the collision test using the comparator's q_hat estimates as the bucket
masses. Work is O(sqrt(n) * polylog) in practical mode; nothing in the
pipeline ever scans the domain, which the query audit enforces.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bucketing import build_scheme
from .coarse import (
    CASE2,
    CoarseConfig,
    CoarseVerdict,
    coarse_compare,
    phase_sizes,
)
from .distributions import ProbabilityVector, SampleStream
from .errors import BadParams, BudgetExceeded, DomainMismatch
from .moment import collect_counts, moment_decide, moment_sample_size
from .rng import TAG_PROBE, spawn_rng

DECISION_ACCEPT = "accept"
DECISION_REJECT = "reject"
STAGE_COARSE = "coarse"
STAGE_MOMENT = "moment"
STAGE_NONE = "none"


@dataclass(frozen=True)
class TesterConfig:
    """Full tester configuration.

    delta for the coarse stage is eps / C_prime. Defaults are the
    calibrated practical-mode constants; faithful mode (unit multipliers,
    no caps) is available for small domains where the closed-form sizes
    are affordable.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    eps: float
    C: float = 100.0
    C_prime: float = 8.0
    c1: float = 64.0
    c2: float = 4.0
    c3: float = 8.0
    c4: float = 3.0
    gamma: float = 1.0
    budget_scale: float | None = 150.0
    trials_for_amplification: int = 1
    master_seed: int = 0
    mode: str = "practical"
    literal_probe_normalization: bool = False

    def __post_init__(self):
        if not 0.0 < self.eps <= 2.0:
            raise BadParams("eps must be in (0, 2]")
        if self.C_prime < 4.0:
            raise BadParams("C_prime must be >= 4")
        t = self.trials_for_amplification
        if t < 1 or t % 2 == 0:
            raise BadParams("amplification trials must be odd and >= 1")
        if self.gamma <= 0:
            raise BadParams("gamma must be positive")

    @property
    def delta(self) -> float:
        return self.eps / self.C_prime

    def coarse_config(self) -> CoarseConfig:
        return CoarseConfig(
            delta=self.delta,
            c1=self.c1,
            c2=self.c2,
            c3=self.c3,
            mode=self.mode,
            budget_scale=self.budget_scale,
            literal_probe_normalization=self.literal_probe_normalization,
        )

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "C": self.C,
            "C_prime": self.C_prime,
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "c4": self.c4,
            "gamma": self.gamma,
            "budget_scale": self.budget_scale,
            "trials_for_amplification": self.trials_for_amplification,
            "master_seed": self.master_seed,
            "mode": self.mode,
            "literal_probe_normalization": self.literal_probe_normalization,
        }


class QueryCounter:
    """Counting view of a pmf: total lookups and distinct indices touched.

    Single-consumer, one per tester run. Exposes the same narrow lookup
    interface as ProbabilityVector.
    """

    def __init__(self, pmf: ProbabilityVector):
        self._pmf = pmf
        self.total = 0
        self._distinct: set[int] = set()

    @property
    def n(self) -> int:
        return self._pmf.n

    @property
    def distinct_count(self) -> int:
        return len(self._distinct)

    def prob(self, i: int) -> float:
        self.total += 1
        self._distinct.add(int(i))
        return self._pmf.prob(i)

    def lookup(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices)
        self.total += int(indices.size)
        self._distinct.update(np.unique(indices).tolist())
        return self._pmf.lookup(indices)


@dataclass(frozen=True, eq=False)
class Verdict:
    """Decision plus full diagnostics and audited work counters."""

    decision: str  # accept | reject
    stage: str  # coarse | moment | none
    triggering_bucket: int | None
    q_samples_used: int
    p_queries_used: int
    distinct_p_queried: int
    sizes: dict
    k: int
    j_star: int
    j_star_degenerate: bool
    coarse: CoarseVerdict
    moment: object | None  # MomentReport when the moment stage ran
    seed: int
    trial_index: int
    config: TesterConfig

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "decision": self.decision,
            "stage": self.stage,
            "triggering_bucket": self.triggering_bucket,
            "q_samples_used": self.q_samples_used,
            "p_queries_used": self.p_queries_used,
            "distinct_p_queried": self.distinct_p_queried,
            "sizes": self.sizes,
            "k": self.k,
            "j_star": self.j_star,
            "j_star_degenerate": self.j_star_degenerate,
            "seed": self.seed,
            "trial_index": self.trial_index,
            "coarse": self.coarse.to_dict(),
            "moment": self.moment.to_dict() if self.moment is not None else None,
            "config": self.config.to_dict(),
        }


def closed_form_budget(n: int, config: TesterConfig) -> dict:
    """The work budget B(n, eps, config) = m1 + s1 + s2 + S, no sampling."""
    scheme = build_scheme(n, config.eps, config.C)
    sizes = phase_sizes(scheme, config.coarse_config())
    S = moment_sample_size(n, config.eps, config.c4)
    return {
        "m1": sizes.m1,
        "s1": sizes.s1,
        "s2": sizes.s2,
        "S": S,
        "q_sample_budget": sizes.m1 + sizes.s1 + S,
        "p_query_budget": sizes.m1 + sizes.s1 + sizes.s2 + S,
        "total": sizes.m1 + sizes.s1 + sizes.s2 + S,
    }


def identity_test(
    p: ProbabilityVector,
    source: SampleStream,
    config: TesterConfig,
    trial_index: int = 0,
) -> Verdict:
    """Decide "q = p" vs "||p - q||_1 >= eps" from samples of q.

    Accepts with probability >= 2/3 when q = p and rejects with
    probability >= 2/3 when the distance promise holds, at calibrated
    constants. Never performs O(n) work.
    """
    if source.n != p.n:
        raise DomainMismatch(f"source domain {source.n} != pmf domain {p.n}")
    scheme = build_scheme(p.n, config.eps, config.C)
    ccfg = config.coarse_config()
    sizes = phase_sizes(scheme, ccfg)
    S = moment_sample_size(p.n, config.eps, config.c4)
    counter = QueryCounter(p)
    draws_before = source.draws
    probe_rng = spawn_rng(config.master_seed, TAG_PROBE, trial_index)

    cv = coarse_compare(source, counter, scheme, ccfg, probe_rng)
    size_info = {
        "m1": sizes.m1,
        "s1": sizes.s1,
        "s2": sizes.s2,
        "S": S,
        "capped": list(sizes.capped),
    }

    def _verdict(decision, stage, bucket, moment_report):
        q_used = source.draws - draws_before
        return Verdict(
            decision=decision,
            stage=stage,
            triggering_bucket=bucket,
            q_samples_used=q_used,
            p_queries_used=counter.total,
            distinct_p_queried=counter.distinct_count,
            sizes=size_info,
            k=scheme.k,
            j_star=scheme.j_star,
            j_star_degenerate=scheme.j_star_degenerate,
            coarse=cv,
            moment=moment_report,
            seed=config.master_seed,
            trial_index=trial_index,
            config=config,
        )

    if cv.case == CASE2:
        # immediate reject; zero moment samples drawn
        assert source.draws - draws_before == sizes.m1 + sizes.s1
        return _verdict(DECISION_REJECT, STAGE_COARSE, cv.triggering_bucket, None)

    stats = collect_counts(source, counter, scheme, S)
    report = moment_decide(
        stats, cv.estimates.q_hat, scheme, config.eps, slack=config.gamma
    )
    assert source.draws - draws_before == sizes.m1 + sizes.s1 + S
    if report.accept:
        return _verdict(DECISION_ACCEPT, STAGE_NONE, None, report)
    return _verdict(DECISION_REJECT, STAGE_MOMENT, report.triggering_bucket, report)


def amplified_test(
    p: ProbabilityVector, source: SampleStream, config: TesterConfig
) -> Verdict:
    """Majority vote over an odd number of independent tester runs.

    Each run gets its own probe sub-stream; q-samples are consumed
    sequentially from the shared source. Counters are summed; the
    diagnostics come from the first run on the majority side.
    """
    trials = config.trials_for_amplification
    verdicts = [
        identity_test(p, source, config, trial_index=t) for t in range(trials)
    ]
    rejects = sum(1 for v in verdicts if v.decision == DECISION_REJECT)
    majority = DECISION_REJECT if rejects > trials / 2 else DECISION_ACCEPT
    lead = next(v for v in verdicts if v.decision == majority)
    if trials == 1:
        return verdicts[0]
    merged = Verdict(
        decision=majority,
        stage=lead.stage,
        triggering_bucket=lead.triggering_bucket,
        q_samples_used=sum(v.q_samples_used for v in verdicts),
        p_queries_used=sum(v.p_queries_used for v in verdicts),
        distinct_p_queried=max(v.distinct_p_queried for v in verdicts),
        sizes=lead.sizes,
        k=lead.k,
        j_star=lead.j_star,
        j_star_degenerate=lead.j_star_degenerate,
        coarse=lead.coarse,
        moment=lead.moment,
        seed=config.master_seed,
        trial_index=lead.trial_index,
        config=config,
    )
    return merged


@dataclass(frozen=True)
class AuditReport:
    ok: bool
    q_samples_used: int
    p_queries_used: int
    distinct_p_queried: int
    q_sample_budget: int
    p_query_budget: int
    used_over_budget: float
    budget_over_n: float

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "q_samples_used": self.q_samples_used,
            "p_queries_used": self.p_queries_used,
            "distinct_p_queried": self.distinct_p_queried,
            "q_sample_budget": self.q_sample_budget,
            "p_query_budget": self.p_query_budget,
            "used_over_budget": self.used_over_budget,
            "budget_over_n": self.budget_over_n,
        }


def query_audit(verdict: Verdict, n: int, config: TesterConfig) -> AuditReport:
    """Assert the run stayed inside its closed-form work budget.

    Checks, per amplification trial:
      - q-samples <= m1 + s1 + S
      - p-queries <= m1 + s1 + s2 + S and <= q-samples + s2
      - distinct p-indices touched <= q-samples + s2 (no domain scan)

    A violation raises BudgetExceeded: that is a tester bug, never an
    input condition.
    """
    budget = closed_form_budget(n, config)
    trials = config.trials_for_amplification
    q_budget = budget["q_sample_budget"] * trials
    p_budget = budget["p_query_budget"] * trials
    s2_total = budget["s2"] * trials
    failures = []
    if verdict.q_samples_used > q_budget:
        failures.append(
            f"q_samples {verdict.q_samples_used} > budget {q_budget}"
        )
    if verdict.p_queries_used > p_budget:
        failures.append(
            f"p_queries {verdict.p_queries_used} > budget {p_budget}"
        )
    if verdict.p_queries_used > verdict.q_samples_used + s2_total:
        failures.append("p_queries exceed q_samples + s2")
    if verdict.distinct_p_queried > verdict.q_samples_used + s2_total:
        failures.append("distinct p-indices exceed q_samples + s2")
    if failures:
        raise BudgetExceeded("; ".join(failures))
    total_budget = budget["total"] * trials
    used = verdict.q_samples_used + verdict.p_queries_used
    return AuditReport(
        ok=True,
        q_samples_used=verdict.q_samples_used,
        p_queries_used=verdict.p_queries_used,
        distinct_p_queried=verdict.distinct_p_queried,
        q_sample_budget=q_budget,
        p_query_budget=p_budget,
        used_over_budget=used / (q_budget + p_budget),
        budget_over_n=total_budget / n,
    )
