"""Coarse bucket-mass comparator.

Distinguishes "p = q" (Case 1) from "the bucket-mass vectors of p and q
are at l1 distance >= delta" (Case 2) without ever computing the exact
per-bucket masses of p. Three estimation phases feed a pure decision:

  1. q-sampling: empirical bucket frequencies q_hat of the unknown side.
  2. heavy capture: enough q-samples that, when p = q, every element
     heavy enough to sit in a bucket >= j_star has been seen at least
     once; summing p over the distinct captured indices then gives the
     exact heavy bucket masses (and a lower bound otherwise).
  3. uniform probing: uniform indices from [n], each contributing
     p_i * n when its bucket is light, give unbiased estimates of the
     light bucket masses.

Heavy buckets are compared at tolerance delta/(8k+8), light buckets at
delta/(4k+4); the first strict exceedance (heavy checks first, then
light, each in increasing bucket order) yields Case 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bucketing import BucketScheme, bucket_indices
from .errors import BadParams
from .distributions import SampleStream

MODE_FAITHFUL = "faithful"
MODE_PRACTICAL = "practical"

STEP_HEAVY = "heavy-check"
STEP_PROBE = "probe-check"
CASE1 = "case1"
CASE2 = "case2"


@dataclass(frozen=True)
class CoarseConfig:
    """Sample-size multipliers and mode for the comparator.

    Faithful mode sizes the phases by the asymptotic formulas with the
    multipliers as given (classically stated with unit constants):

        m1  = ceil(c1 * (k/delta)^2 * ln(k+2))
        s1  = ceil(c2 * sqrt(n) * ln(n+1))
        s2  = ceil(c3 * (k/delta)^3 * sqrt(n) * ln(k+2))

    Practical mode replaces (k/delta)^3 by (k/delta)^2 in s2 (an additive
    Chernoff bound suffices for the light-bucket tolerance) and caps each
    phase at ceil(budget_scale * sqrt(n)) so desk-scale runs stay
    feasible at large k. Thresholds and decision structure are identical
    in both modes. Defaults are the calibrated values recorded by
    scripts/run_calibration.py.
    """

    delta: float
    c1: float = 64.0
    c2: float = 4.0
    c3: float = 8.0
    mode: str = MODE_PRACTICAL
    budget_scale: float | None = 150.0
    literal_probe_normalization: bool = False

    def __post_init__(self):
        if not 0.0 < self.delta <= 2.0:
            raise BadParams("delta must be in (0, 2]")
        if min(self.c1, self.c2, self.c3) <= 0:
            raise BadParams("multipliers must be positive")
        if self.mode not in (MODE_FAITHFUL, MODE_PRACTICAL):
            raise BadParams(f"unknown mode {self.mode!r}")
        if self.budget_scale is not None and self.budget_scale <= 0:
            raise BadParams("budget_scale must be positive or None")

    @classmethod
    def faithful(cls, delta: float, **overrides) -> "CoarseConfig":
        """Unit-constant faithful configuration."""
        kw = dict(c1=1.0, c2=1.0, c3=1.0, mode=MODE_FAITHFUL, budget_scale=None)
        kw.update(overrides)
        return cls(delta, **kw)


@dataclass(frozen=True)
class PhaseSizes:
    m1: int
    s1: int
    s2: int
    capped: tuple[bool, bool, bool]

    @property
    def total_q_samples(self) -> int:
        return self.m1 + self.s1

    @property
    def total_p_queries(self) -> int:
        return self.m1 + self.s1 + self.s2


def phase_sizes(scheme: BucketScheme, config: CoarseConfig) -> PhaseSizes:
    """Evaluate the three phase sizes for a scheme (no sampling)."""
    n, k, d = scheme.n, scheme.k, config.delta
    lk = math.log(k + 2)
    m1 = math.ceil(config.c1 * (k / d) ** 2 * lk)
    s1 = math.ceil(config.c2 * math.sqrt(n) * math.log(n + 1))
    s2_exp = 3 if config.mode == MODE_FAITHFUL else 2
    s2 = math.ceil(config.c3 * (k / d) ** s2_exp * math.sqrt(n) * lk)
    capped = (False, False, False)
    if config.mode == MODE_PRACTICAL and config.budget_scale is not None:
        cap = math.ceil(config.budget_scale * math.sqrt(n))
        capped = (m1 > cap, s1 > cap, s2 > cap)
        m1, s1, s2 = min(m1, cap), min(s1, cap), min(s2, cap)
    return PhaseSizes(m1=m1, s1=s1, s2=s2, capped=capped)


@dataclass(frozen=True, eq=False)
class CoarseEstimates:
    """Working state of one comparator run.

    q_hat[j]      empirical q-frequency of bucket j (sums to 1 exactly).
    heavy_mass[j] sum of p over the distinct captured indices in bucket j,
                  for j >= j_star; zero below. Never exceeds the true
                  bucket mass (each element counted once).
    probe_mass[j] unbiased uniform-probe estimate of bucket j's p-mass,
                  for j < j_star; zero at and above.
    """

    q_hat: np.ndarray
    heavy_mass: np.ndarray
    probe_mass: np.ndarray
    s2_size: int


@dataclass(frozen=True, eq=False)
class CoarseVerdict:
    case: str  # CASE1 | CASE2
    triggering_step: str | None  # STEP_HEAVY | STEP_PROBE | None
    triggering_bucket: int | None
    estimates: CoarseEstimates

    def to_dict(self) -> dict:
        nz = lambda v: {int(j): float(x) for j, x in enumerate(v) if x != 0.0}
        return {
            "case": self.case,
            "triggering_step": self.triggering_step,
            "triggering_bucket": self.triggering_bucket,
            "q_hat_nonzero": nz(self.estimates.q_hat),
            "heavy_mass_nonzero": nz(self.estimates.heavy_mass),
            "probe_mass_nonzero": nz(self.estimates.probe_mass),
            "s2_size": self.estimates.s2_size,
        }


def estimate_q(
    source: SampleStream, p, scheme: BucketScheme, m: int
) -> np.ndarray:
    """Empirical bucket frequencies from exactly m q-samples.

    Performs exactly m p-queries (one per sample, repeats included).
    """
    if m < 1:
        raise BadParams("m must be >= 1")
    draws = source.draw_many(m)
    pv = p.lookup(draws)
    buckets = bucket_indices(scheme, pv)
    return np.bincount(buckets, minlength=scheme.k + 1) / float(m)


def collect_heavy_support(
    source: SampleStream, p, scheme: BucketScheme, s1_size: int
) -> np.ndarray:
    """Deduplicated heavy-bucket p-mass from s1_size q-samples.

    Each distinct sampled index in a bucket >= j_star contributes its
    p-value once; entries below j_star stay zero. Always a lower bound
    on the true bucket mass.
    """
    if s1_size < 1:
        raise BadParams("s1_size must be >= 1")
    draws = source.draw_many(s1_size)
    pv = p.lookup(draws)  # exactly one p-query per draw
    _, first_pos = np.unique(draws, return_index=True)
    upv = pv[first_pos]
    buckets = bucket_indices(scheme, upv)
    mask = buckets >= scheme.j_star
    return np.bincount(
        buckets[mask], weights=upv[mask], minlength=scheme.k + 1
    )


def uniform_probe(
    p,
    scheme: BucketScheme,
    s2_size: int,
    rng: np.random.Generator,
    literal_normalization: bool = False,
) -> np.ndarray:
    """Light-bucket p-mass estimates from uniform probes of [n].

    Draws s2_size indices uniformly with replacement and performs exactly
    that many p-queries. Each probe landing in a bucket below j_star
    contributes p_i * n, so the estimate is unbiased for the bucket mass.
    With literal_normalization the n factor is dropped (estimating
    mass/n instead); exposed for comparison only, the decision thresholds
    assume the unbiased form.
    """
    if s2_size < 1:
        raise BadParams("s2_size must be >= 1")
    n = scheme.n
    u = rng.random(s2_size)
    idx = np.minimum((u * n).astype(np.int64), n - 1)
    pv = p.lookup(idx)
    buckets = bucket_indices(scheme, pv)
    mask = buckets < scheme.j_star
    contrib = pv[mask]
    # every light-bucket probe is worth at most ~1/sqrt(n): the top light
    # boundary sits below bucket j_star's upper bound
    if contrib.size:
        limit = (1.0 + scheme.eps_prime) / math.sqrt(n) * (1.0 + 1e-12)
        peak = float(contrib.max())
        if peak > limit:
            raise AssertionError(
                f"light-bucket probe contribution {peak} exceeds {limit}"
            )
    scale = 1.0 if literal_normalization else float(n)
    return np.bincount(
        buckets[mask], weights=contrib * scale, minlength=scheme.k + 1
    ) / float(s2_size)


def coarse_decide(
    estimates: CoarseEstimates, scheme: BucketScheme, config: CoarseConfig
) -> CoarseVerdict:
    """Pure threshold decision over the collected estimates.

    Heavy buckets [j_star, k] are scanned first at tolerance
    delta/(8k+8), then light buckets [0, j_star) at delta/(4k+4), both
    in increasing bucket order; the first strict exceedance is reported.
    """
    k = scheme.k
    thr_heavy = config.delta / (8 * k + 8)
    thr_probe = config.delta / (4 * k + 4)
    q_hat = estimates.q_hat

    heavy_dev = np.abs(q_hat - estimates.heavy_mass)
    heavy_bad = np.nonzero(heavy_dev[scheme.j_star :] > thr_heavy)[0]
    if heavy_bad.size:
        j = int(scheme.j_star + heavy_bad[0])
        return CoarseVerdict(CASE2, STEP_HEAVY, j, estimates)

    probe_dev = np.abs(q_hat - estimates.probe_mass)
    probe_bad = np.nonzero(probe_dev[: scheme.j_star] > thr_probe)[0]
    if probe_bad.size:
        return CoarseVerdict(CASE2, STEP_PROBE, int(probe_bad[0]), estimates)

    return CoarseVerdict(CASE1, None, None, estimates)


def coarse_compare(
    source: SampleStream,
    p,
    scheme: BucketScheme,
    config: CoarseConfig,
    rng: np.random.Generator,
) -> CoarseVerdict:
    """Run all three phases and decide.

    Consumes m1 + s1 q-samples and performs m1 + s1 + s2 p-queries.
    """
    sizes = phase_sizes(scheme, config)
    q_hat = estimate_q(source, p, scheme, sizes.m1)
    heavy = collect_heavy_support(source, p, scheme, sizes.s1)
    probe = uniform_probe(
        p, scheme, sizes.s2, rng, config.literal_probe_normalization
    )
    estimates = CoarseEstimates(
        q_hat=q_hat, heavy_mass=heavy, probe_mass=probe, s2_size=sizes.s2
    )
    return coarse_decide(estimates, scheme, config)
