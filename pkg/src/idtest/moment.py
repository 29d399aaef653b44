"""Within-bucket second-moment (collision) test.

After the bucket masses of p and q are known to agree, the remaining way
for q to differ is an uneven shape inside some bucket. The number of
sample pairs colliding on the same element inside bucket j has expectation
C(S,2) * sum_{i in R_j} q_i^2, which for q matching p within the bucket is
at most C(S,2) * mass_j * upper_j. Any bucket whose collision count
strictly exceeds that bound with (1 + eps/4) slack is rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bucketing import BucketScheme, bucket_indices
from .distributions import SampleStream
from .errors import BadParams, DimensionMismatch


@dataclass(frozen=True, eq=False)
class CollisionStats:
    """Sparse occurrence counts and per-bucket collision statistic.

    counts holds only sampled indices (memory O(distinct samples), never
    O(n)); per_bucket_stat[j] = sum over i in bucket j of C(s_i, 2).
    """

    total_samples: int
    counts: dict[int, int]
    per_bucket_stat: np.ndarray


def sample_pairs(s: int) -> float:
    """C(s, 2) in floating point, overflow-safe for large s."""
    return s * (s - 1) / 2.0


def collect_counts(
    source: SampleStream, p, scheme: BucketScheme, S: int
) -> CollisionStats:
    """Draw exactly S samples and build the sparse collision statistic.

    One p-query per distinct sampled index.
    """
    if S < 2:
        raise BadParams("S must be >= 2")
    draws = source.draw_many(S)
    distinct, occ = np.unique(draws, return_counts=True)
    assert distinct.size <= S  # sparsity: memory tracks S, not n
    pv = p.lookup(distinct)
    buckets = bucket_indices(scheme, pv)
    pairs = occ * (occ - 1) / 2.0
    stat = np.bincount(buckets, weights=pairs, minlength=scheme.k + 1)
    counts = {int(i): int(c) for i, c in zip(distinct, occ)}
    return CollisionStats(total_samples=S, counts=counts, per_bucket_stat=stat)


def moment_threshold(
    scheme: BucketScheme, j: int, mass: float, eps: float, S: int,
    slack: float = 1.0,
) -> float:
    """Rejection threshold for bucket j at mass `mass`."""
    return slack * (1.0 + eps / 4.0) * sample_pairs(S) * mass * float(
        scheme.boundaries[j]
    )


@dataclass(frozen=True, eq=False)
class MomentReport:
    """Per-bucket verdicts plus the overall accept/reject decision."""

    accept: bool
    triggering_bucket: int | None
    tested: np.ndarray  # bool per bucket
    rejected: np.ndarray  # bool per bucket
    thresholds: np.ndarray
    stats: np.ndarray
    mass_guard: float

    def to_dict(self) -> dict:
        idx = np.nonzero(self.tested)[0]
        return {
            "accept": self.accept,
            "triggering_bucket": self.triggering_bucket,
            "n_tested": int(self.tested.sum()),
            "n_skipped": int(len(self.tested) - self.tested.sum()),
            "mass_guard": self.mass_guard,
            "tested_buckets": {
                int(j): {
                    "stat": float(self.stats[j]),
                    "threshold": float(self.thresholds[j]),
                    "rejected": bool(self.rejected[j]),
                }
                for j in idx
            },
        }


def moment_decide(
    stats: CollisionStats,
    bucket_mass: np.ndarray,
    scheme: BucketScheme,
    eps: float,
    slack: float = 1.0,
) -> MomentReport:
    """Pure decision: reject any tested bucket whose statistic strictly
    exceeds its threshold.

    bucket_mass is whatever mass vector stands in for the true per-bucket
    p-masses: the exact oracle values, or the q_hat estimates in the
    efficient pipeline. Bucket 0 and buckets with mass <= eps/(4k+4) are
    skipped. `slack` multiplies the threshold right side (pipeline knob
    for estimated masses; 1.0 leaves the classic threshold unchanged).
    """
    k = scheme.k
    mass = np.asarray(bucket_mass, dtype=np.float64)
    if mass.shape[0] != k + 1:
        raise DimensionMismatch(
            f"bucket_mass has length {mass.shape[0]}, expected {k + 1}"
        )
    guard = eps / (4 * k + 4)
    tested = mass > guard
    tested[0] = False
    thresholds = (
        slack
        * (1.0 + eps / 4.0)
        * sample_pairs(stats.total_samples)
        * mass
        * scheme.boundaries
    )
    rejected = tested & (stats.per_bucket_stat > thresholds)
    bad = np.nonzero(rejected)[0]
    return MomentReport(
        accept=not bad.size,
        triggering_bucket=int(bad[0]) if bad.size else None,
        tested=tested,
        rejected=rejected,
        thresholds=thresholds,
        stats=stats.per_bucket_stat,
        mass_guard=guard,
    )


def moment_sample_size(n: int, eps: float, c4: float) -> int:
    """Default collision-sample size: ceil(c4 * sqrt(n) * ln(n+1) / eps^2)."""
    return math.ceil(c4 * math.sqrt(n) * math.log(n + 1) / eps**2)
