"""Known distributions, sample access to unknown ones, and exact oracles.

The known distribution p is a dense probability vector with O(1) indexed
queries. The unknown distribution q is only ever reached through a
SampleStream, which yields i.i.d. indices and never exposes probabilities.
Synthetic q sources are backed by an alias table so a draw is O(1) and the
harness cost never masks the tester cost.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadParams,
    DomainMismatch,
    NegativeEntry,
    SampleExhausted,
    SumOutOfTolerance,
)
from .rng import TAG_INSTANCE, seed_sequence

# Sum tolerance: n up to ~1e7 accumulates at most ~n * machine-epsilon
# of rounding in a well-formed pmf, which stays well below 1e-9.
PMF_SUM_TOL = 1e-9

INSTANCE_KINDS = ("identical-uniform", "random-half", "eps-perturbed", "zipf-pair")


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """A validated pmf over the domain [n] (stored 0-indexed)."""

    probs: np.ndarray

    @property
    def n(self) -> int:
        return int(self.probs.shape[0])

    def prob(self, i: int) -> float:
        """O(1) query of entry i."""
        return float(self.probs[i])

    def lookup(self, indices: np.ndarray) -> np.ndarray:
        """Vectorized query: p_i for each index in `indices`."""
        return self.probs[indices]


def validate_pmf(probs) -> ProbabilityVector:
    """Validate a sequence of reals as a pmf.

    Raises NegativeEntry for the first negative entry (exact sign check,
    no tolerance) and SumOutOfTolerance when the total is not 1 +/- 1e-9.
    """
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise BadParams("pmf must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise BadParams("pmf entries must be finite")
    neg = np.nonzero(arr < 0.0)[0]
    if neg.size:
        i = int(neg[0])
        raise NegativeEntry(i, float(arr[i]))
    total = float(arr.sum())
    if abs(total - 1.0) > PMF_SUM_TOL:
        raise SumOutOfTolerance(total, PMF_SUM_TOL)
    arr = arr.copy()
    arr.flags.writeable = False
    return ProbabilityVector(arr)


def l1_distance(p: ProbabilityVector, q: ProbabilityVector) -> float:
    """Exact l1 distance sum_i |p_i - q_i|, in [0, 2].

    O(n) oracle; used by the harness and the `oracle` CLI command only,
    never by the tester itself.
    """
    if p.n != q.n:
        raise DomainMismatch(f"domain sizes differ: {p.n} vs {q.n}")
    return float(np.abs(p.probs - q.probs).sum())


class SampleStream(ABC):
    """I.i.d. sample access to an unknown distribution on [n].

    Single-consumer: draws mutate the counter. Identical seeds produce
    identical draw sequences regardless of how draws are batched.
    """

    n: int
    seed: object

    def __init__(self):
        self._draws = 0

    @property
    def draws(self) -> int:
        """Number of samples drawn so far."""
        return self._draws

    def draw(self) -> int:
        return int(self.draw_many(1)[0])

    @abstractmethod
    def draw_many(self, m: int) -> np.ndarray:
        """Draw m independent samples (0-indexed)."""


def _build_alias_tables(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias construction, O(n)."""
    n = probs.shape[0]
    scaled = probs * n
    accept = np.ones(n, dtype=np.float64)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        accept[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small.append(g)
        else:
            large.append(g)
    # Leftovers are 1.0 up to rounding; they keep themselves.
    for i in small + large:
        accept[i] = 1.0
        alias[i] = i
    return accept, alias


class AliasSampler(SampleStream):
    """O(1)-per-draw sampler for a known pmf (synthetic q source).

    Table construction is O(n); that is harness setup, not tester work.
    Index and acceptance randomness come from two independent sub-streams
    of the seed so that draw sequences are invariant under batching.
    """

    def __init__(self, pmf: ProbabilityVector, seed, _tables=None):
        super().__init__()
        self.n = pmf.n
        self.seed = seed
        self._pmf = pmf
        if _tables is None:
            _tables = _build_alias_tables(pmf.probs)
        self._accept, self._alias = _tables
        ss = seed if isinstance(seed, np.random.SeedSequence) else seed_sequence(seed)
        idx_ss, acc_ss = ss.spawn(2)
        self._idx_rng = np.random.default_rng(idx_ss)
        self._acc_rng = np.random.default_rng(acc_ss)

    def spawn(self, seed) -> "AliasSampler":
        """Fresh stream over the same pmf, sharing the O(n) tables."""
        return AliasSampler(self._pmf, seed, _tables=(self._accept, self._alias))

    def draw_many(self, m: int) -> np.ndarray:
        if m < 0:
            raise BadParams("draw count must be non-negative")
        u = self._idx_rng.random(m)
        idx = np.minimum((u * self.n).astype(np.int64), self.n - 1)
        v = self._acc_rng.random(m)
        out = np.where(v < self._accept[idx], idx, self._alias[idx])
        self._draws += m
        return out


def build_sampler(p: ProbabilityVector, seed: int) -> AliasSampler:
    """Sampler whose draw distribution equals p, deterministic under seed."""
    return AliasSampler(p, seed)


class FileSampleStream(SampleStream):
    """Replays a finite recorded sample sequence (0-indexed internally)."""

    def __init__(self, samples: np.ndarray, n: int, seed=None):
        super().__init__()
        self.n = int(n)
        self.seed = seed
        self._samples = np.asarray(samples, dtype=np.int64)
        self._cursor = 0

    @property
    def remaining(self) -> int:
        return int(self._samples.size - self._cursor)

    def draw_many(self, m: int) -> np.ndarray:
        if m < 0:
            raise BadParams("draw count must be non-negative")
        if self._cursor + m > self._samples.size:
            raise SampleExhausted(
                f"needed {m} samples but only {self.remaining} remain"
            )
        out = self._samples[self._cursor : self._cursor + m]
        self._cursor += m
        self._draws += m
        return out


def uniform_pmf(n: int) -> ProbabilityVector:
    return validate_pmf(np.full(n, 1.0 / n))


def zipf_pmf(n: int, a: float = 1.0) -> ProbabilityVector:
    w = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** a
    return validate_pmf(w / w.sum())


def point_mass_pmf(n: int, index: int) -> ProbabilityVector:
    arr = np.zeros(n)
    arr[index] = 1.0
    return validate_pmf(arr)


def perturbed_pmf(n: int, eps: float, seed: int) -> ProbabilityVector:
    """Uniform pmf with l1-mass exactly eps moved between two index sets.

    A seeded permutation picks the loser set; each full loser drops to 0,
    at most one partial loser absorbs the remainder, and the gainers share
    eps/2 equally, so ||uniform - result||_1 = eps up to float rounding.
    """
    if not 0.0 < eps < 2.0:
        raise BadParams("eps-perturbed requires 0 < eps < 2")
    unit = 1.0 / n
    half = eps / 2.0
    m_full = int(half / unit)  # full losers, each losing exactly 1/n
    r = half - m_full * unit
    n_losers = m_full + (1 if r > 0 else 0)
    if n_losers + 1 > n:
        raise BadParams(f"eps={eps} needs more loser indices than n={n} allows")
    order = np.random.default_rng(
        seed_sequence(seed, TAG_INSTANCE)
    ).permutation(n)
    q = np.full(n, unit)
    q[order[:m_full]] = 0.0
    if r > 0:
        # max() guards the r ~ unit rounding edge from going negative
        q[order[m_full]] = max(unit - r, 0.0)
    gainers = order[n_losers:]
    q[gainers] += half / gainers.size
    return validate_pmf(q)


def generate_instance(
    kind: str, n: int, seed: int, **params
) -> tuple[ProbabilityVector, ProbabilityVector]:
    """Build a (p, q) pair with a known exact l1 distance.

    Kinds:
      identical-uniform  p = q = uniform on [n]          distance 0
      random-half        p uniform, q uniform on a seeded
                         random half of [n]              distance 1
      eps-perturbed      p uniform, q = perturbed_pmf    distance params["eps"]
      zipf-pair          p = q = zipf(params.get("a"))   distance 0
    """
    if n < 2:
        raise BadParams("n must be at least 2")
    if kind == "identical-uniform":
        p = uniform_pmf(n)
        return p, p
    if kind == "random-half":
        if n % 2 != 0:
            raise BadParams("random-half requires even n")
        p = uniform_pmf(n)
        rng = np.random.default_rng(seed_sequence(seed, TAG_INSTANCE))
        chosen = rng.permutation(n)[: n // 2]
        q = np.zeros(n)
        q[chosen] = 2.0 / n
        return p, validate_pmf(q)
    if kind == "eps-perturbed":
        if "eps" not in params:
            raise BadParams("eps-perturbed requires an eps parameter")
        return uniform_pmf(n), perturbed_pmf(n, float(params["eps"]), seed)
    if kind == "zipf-pair":
        p = zipf_pmf(n, float(params.get("a", 1.0)))
        return p, p
    raise BadParams(f"unknown instance kind {kind!r}; choose from {INSTANCE_KINDS}")


def advertised_distance(kind: str, **params) -> float:
    """The exact l1 distance a generated instance is constructed to have."""
    if kind in ("identical-uniform", "zipf-pair"):
        return 0.0
    if kind == "random-half":
        return 1.0
    if kind == "eps-perturbed":
        return float(params["eps"])
    raise BadParams(f"unknown instance kind {kind!r}")
