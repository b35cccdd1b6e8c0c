"""Arrival-order probabilities for the segments of one transmission round.

A round sends ``C`` segments, numbered 1..C.  Arrival order at the receiver
is treated as a uniformly random permutation.  Two conditional
distributions drive the ACK that closes the round:

* ``m``: given that segment 1 arrives first, the length of the in-order
  prefix 1, 2, ..., m before the first out-of-order arrival.
* ``q``: given that segment 1 does *not* arrive first, one plus the length
  of the contiguous run 2, 3, ... already buffered when segment 1 arrives.
  The ACK triggered by segment 1 then covers ``q`` segments.

The closed forms are evaluated as products of ratios, never as factorials,
so they stay finite for large ``C``.  ``brute_force_*`` enumerate
permutations and are the reference the closed forms are tested against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

BRUTE_FORCE_MAX_C = 9


class DistributionDomainError(ValueError):
    pass


@dataclass(frozen=True)
class MDistribution:
    """Distribution of the in-order prefix length ``m`` given segment 1 is first.

    ``below[k-1]`` is ``P(m = k)`` for ``k = 1 .. m_ack-1``.  ``top`` is the
    probability of the delayed-ACK bucket, which acknowledges ``top_size``
    segments: ``m_ack`` normally, or all ``C`` segments when the batch is
    not larger than ``m_ack``.
    """

    batch_size: int
    m_ack: int
    below: tuple[float, ...]
    top: float

    @property
    def top_size(self) -> int:
        return min(self.m_ack, self.batch_size)

    @property
    def total(self) -> float:
        return math.fsum(self.below) + self.top

    def as_dict(self) -> dict[int | str, float]:
        out: dict[int | str, float] = {k: p for k, p in enumerate(self.below, start=1)}
        out[f">={self.m_ack}"] = self.top
        return out

    def expected_acked(self) -> float:
        return math.fsum(k * p for k, p in enumerate(self.below, start=1)) + self.top_size * self.top


@dataclass(frozen=True)
class QDistribution:
    """``probs[k-1] = P(q = k)`` for ``k = 1 .. C``."""

    batch_size: int
    probs: tuple[float, ...]

    @property
    def total(self) -> float:
        return math.fsum(self.probs)

    def __getitem__(self, k: int) -> float:
        if not 1 <= k <= self.batch_size:
            raise IndexError(k)
        return self.probs[k - 1]

    def as_dict(self) -> dict[int, float]:
        return {k: p for k, p in enumerate(self.probs, start=1)}

    def expected(self) -> float:
        return math.fsum(k * p for k, p in enumerate(self.probs, start=1))


def p_first(batch_size: int) -> float:
    """Probability that segment 1 is the first of ``batch_size`` to arrive."""
    if batch_size < 1:
        raise DistributionDomainError(f"batch size must be ≥ 1, got {batch_size}")
    return 1.0 / batch_size


def _check_batch(batch_size: int) -> None:
    if batch_size < 2:
        raise DistributionDomainError(f"batch size must be ≥ 2, got {batch_size}")


def prefix_at_least(batch_size: int, k: int) -> float:
    """P(m ≥ k | segment 1 first) = 1 / ((C-1)(C-2)...(C-k+1)).

    Segments 2..k must occupy arrival positions 2..k in order.
    """
    p = 1.0
    for t in range(1, k):
        p /= batch_size - t
    return p


def m_distribution(batch_size: int, m_ack: int) -> MDistribution:
    """Distribution of the in-order prefix ``m`` bucketed at ``m_ack``.

    ``P(m = k) = (C-k-1) (C-k-1)! / (C-1)!`` for ``k ≤ C-2``; ``m = C-1`` is
    impossible (the last remaining segment is then also in order).
    """
    _check_batch(batch_size)
    if m_ack < 1:
        raise DistributionDomainError(f"m_ack must be ≥ 1, got {m_ack}")
    c = batch_size
    below = []
    # prefix probability P(m >= k) is built incrementally: P(m>=k+1) = P(m>=k)/(C-k)
    at_least = 1.0
    for k in range(1, m_ack):
        if k <= c - 2:
            below.append(at_least * (c - k - 1) / (c - k))
        else:
            below.append(0.0)
        if k < c:
            at_least /= c - k
    top = prefix_at_least(c, min(m_ack, c))
    return MDistribution(c, m_ack, tuple(below), top)


def q_distribution(batch_size: int) -> QDistribution:
    """Distribution of the ACK size ``q`` given segment 1 does not arrive first.

    ``P(q=1) = (C-2) / (2(C-1))``, ``P(q=k) = C / (k(k+1)(C-1))`` for
    ``1 < k < C`` and ``P(q=C) = 1/(C-1)``.
    """
    _check_batch(batch_size)
    c = batch_size
    probs = np.empty(c)
    probs[0] = (c - 2) / (2.0 * (c - 1))
    k = np.arange(2, c, dtype=float)
    probs[1 : c - 1] = c / (k * (k + 1) * (c - 1))
    probs[c - 1] = 1.0 / (c - 1)
    return QDistribution(c, tuple(probs.tolist()))


def q_distribution_three_branch(batch_size: int) -> QDistribution:
    """Literal evaluation of the published three-branch formula for ``P(q=k)``.

    Kept for comparison only.  The middle branch carries a factor
    ``(C-k-1)`` that vanishes at ``k = C-1``, so the table does not sum to
    one.  For ``C <= 5`` the deficit is exactly ``q_distribution(C)[C-1]``;
    from ``C = 6`` the middle branch also drifts away from enumeration
    (``C = 6, k = 2`` gives 0.1 against 0.2).  Evaluated in exact rational
    arithmetic.
    """
    _check_batch(batch_size)
    c = batch_size
    fact_c1 = math.factorial(c - 1)
    denom = c * fact_c1 - fact_c1  # C! - (C-1)!
    probs = []
    for k in range(1, c + 1):
        if k == 1:
            value = Fraction((c - 2) * fact_c1, 2 * denom)
        elif k == c:
            value = Fraction(fact_c1, denom)
        else:
            inner = sum(math.perm(l - 2, k - 1) * (c - l + 1) for l in range(k + 1, c + 1))
            value = Fraction((c - k - 1) * inner, denom)
        probs.append(float(value))
    return QDistribution(c, tuple(probs))


# --------------------------------------------------------------------------
# permutation oracles


def _check_oracle(batch_size: int) -> None:
    _check_batch(batch_size)
    if batch_size > BRUTE_FORCE_MAX_C:
        raise DistributionDomainError(
            f"brute force limited to C ≤ {BRUTE_FORCE_MAX_C}, got {batch_size}"
        )


def brute_force_m_distribution(batch_size: int, m_ack: int) -> MDistribution:
    """Enumerate the (C-1)! orders of segments 2..C arriving after segment 1."""
    _check_oracle(batch_size)
    c = batch_size
    counts = [0] * (c + 1)
    total = 0
    for rest in itertools.permutations(range(2, c + 1)):
        order = (1,) + rest
        m = 0
        while m < c and order[m] == m + 1:
            m += 1
        counts[m] += 1
        total += 1
    below = tuple(
        Fraction(counts[k], total) if k < min(m_ack, c) else Fraction(0) for k in range(1, m_ack)
    )
    top = Fraction(sum(counts[min(m_ack, c):]), total)
    return MDistribution(c, m_ack, tuple(float(p) for p in below), float(top))


def brute_force_q_distribution(batch_size: int) -> QDistribution:
    """Enumerate all C! - (C-1)! permutations in which segment 1 is not first."""
    _check_oracle(batch_size)
    c = batch_size
    counts = [0] * (c + 1)
    total = 0
    for order in itertools.permutations(range(1, c + 1)):
        if order[0] == 1:
            continue
        before = set(order[: order.index(1)])
        q = 1
        while q + 1 in before:
            q += 1
        counts[q] += 1
        total += 1
    return QDistribution(c, tuple(float(Fraction(counts[k], total)) for k in range(1, c + 1)))
