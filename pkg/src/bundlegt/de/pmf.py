"""
Operations on probability mass functions over small integer supports.

All functions act on the last axis, so a table of conditional pmfs with one row per
conditioning value is processed row by row. Index ``v`` of the last axis holds the
probability of the value ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom


__all__ = [
    "CondPmf",
    "delta",
    "cdf",
    "pmf_convolve",
    "pmf_power",
    "pmf_max2",
    "pmf_min2",
    "order_stat_max",
    "order_stat_min",
    "binomial_pmf",
    "syndrome_cutoff",
    "enumerate_multisets",
    "multinomial_logweight",
]


def delta(value: int, size: int) -> np.ndarray:
    """Point mass at ``value`` on the support ``0..size-1``."""
    p = np.zeros(size)
    p[value] = 1.0
    return p


def cdf(p: np.ndarray) -> np.ndarray:
    """Cumulative distribution along the last axis, capped at 1."""
    return np.minimum(np.cumsum(p, axis=-1), 1.0)


def pmf_convolve(a: np.ndarray, b: np.ndarray, size: int | None = None) -> np.ndarray:
    """
    Pmf of the sum of two independent variables.

    :param a: First pmf.
    :param b: Second pmf.
    :param size: If given, the result is truncated or zero padded to this length.
    """
    out = np.convolve(a, b)
    if size is None:
        return out
    if len(out) >= size:
        return out[:size]
    return np.pad(out, (0, size - len(out)))


def pmf_power(p: np.ndarray, k: int, size: int | None = None) -> np.ndarray:
    """Pmf of the sum of ``k`` i.i.d. variables, by repeated squaring."""

    result = np.ones(1)
    base = p

    while k > 0:
        if k & 1:
            result = pmf_convolve(result, base, size)
        k >>= 1
        if k:
            base = pmf_convolve(base, base, size)

    return result if size is None else pmf_convolve(result, np.ones(1), size)


def pmf_max2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Pmf of the maximum of two independent variables on the same support. The maximum
    is ``i`` if one variable equals ``i`` while the other is at most ``i``, counting the
    tie only once.
    """
    Fa = cdf(a)
    Fb = cdf(b)
    Fa_prev = np.concatenate([np.zeros(a.shape[:-1] + (1,)), Fa[..., :-1]], axis=-1)
    return a * Fb + Fa_prev * b


def pmf_min2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pmf of the minimum of two independent variables on the same support."""
    Fa = cdf(a)
    Fb = cdf(b)
    Fb_prev = np.concatenate([np.zeros(b.shape[:-1] + (1,)), Fb[..., :-1]], axis=-1)
    return a * (1.0 - Fb_prev) + (1.0 - Fa) * b


def order_stat_max(p: np.ndarray, k: int) -> np.ndarray:
    """
    Pmf of the maximum of ``k`` i.i.d. variables, ``F(y)^k - F(y-1)^k``. For ``k = 0``
    the maximum over an empty set is the smallest support value.
    """

    if k == 0:
        out = np.zeros_like(p, dtype=float)
        out[..., 0] = 1.0
        return out

    Fk = cdf(p) ** k
    return np.clip(np.diff(Fk, axis=-1, prepend=0.0), 0.0, None)


def order_stat_min(p: np.ndarray, k: int) -> np.ndarray:
    """
    Pmf of the minimum of ``k`` i.i.d. variables, ``(1-F(y-1))^k - (1-F(y))^k``. For
    ``k = 0`` the minimum over an empty set is the largest support value.
    """

    if k == 0:
        out = np.zeros_like(p, dtype=float)
        out[..., -1] = 1.0
        return out

    S = (1.0 - cdf(p)) ** k  # survival beyond y
    S_prev = np.concatenate([np.ones(p.shape[:-1] + (1,)), S[..., :-1]], axis=-1)
    return np.clip(S_prev - S, 0.0, None)


def binomial_pmf(trials: int, prob: float) -> np.ndarray:
    """Binomial pmf on ``0..trials``."""
    return binom.pmf(np.arange(trials + 1), trials, prob)


def syndrome_cutoff(d_c: int, gamma: float, eps_tail: float) -> int:
    """
    Smallest test result ``s`` with ``P(S > s) < eps_tail`` for ``S ~ Bino(d_c,
    gamma)``. Larger test results are neglected when averaging over test neighbourhoods.

    :param d_c: Test degree.
    :param gamma: Defect probability as a fraction.
    :param eps_tail: Neglected probability mass.
    """
    tail = binom.sf(np.arange(d_c + 1), d_c, gamma)
    below = np.flatnonzero(tail < eps_tail)
    return int(below[0]) if len(below) else d_c


def enumerate_multisets(
    k: int, q: int, t_max: int, allowed: np.ndarray | None = None
) -> Iterator[np.ndarray]:
    """
    Yields the value counts of all multisets of ``k`` values in ``0..q`` whose sum is at
    most ``t_max``. Non-zero values are generated in non-increasing order so that every
    multiset appears exactly once.

    :param k: Multiset size.
    :param q: Largest value.
    :param t_max: Largest sum.
    :param allowed: Boolean mask of length ``q + 1`` restricting the values used.
    :returns: Iterator over count vectors ``c`` of length ``q + 1`` which sum to
        ``k``.
    """

    if allowed is None:
        allowed = np.ones(q + 1, dtype=bool)

    counts = np.zeros(q + 1, dtype=np.int64)

    def recurse(largest: int, slots: int, budget: int) -> Iterator[np.ndarray]:

        if slots == 0 or largest == 0:
            if slots == 0 or allowed[0]:
                counts[0] = slots
                yield counts.copy()
                counts[0] = 0
            return

        for value in range(min(largest, budget), 0, -1):
            if not allowed[value]:
                continue
            for c in range(1, min(slots, budget // value) + 1):
                counts[value] = c
                yield from recurse(value - 1, slots - c, budget - c * value)
            counts[value] = 0

        # no further non-zero value
        yield from recurse(0, slots, budget)

    yield from recurse(q, k, t_max)


def multinomial_logweight(counts: np.ndarray, log_p: np.ndarray) -> float:
    """
    Log probability of the value counts under the multinomial law with category
    log-probabilities ``log_p``. Categories with a zero count do not contribute.
    """
    used = counts > 0
    k = counts.sum()
    return float(
        gammaln(k + 1)
        - gammaln(counts[used] + 1).sum()
        + (counts[used] * log_p[used]).sum()
    )


@dataclass
class CondPmf:
    """
    A table of pmfs of a bound on a bundle value, one row per true bundle value ``z``.
    ``table[z, v]`` is the probability that the bound equals ``v`` given ``Z = z``.

    :param table: Array of shape ``(q + 1, q + 1)``.
    :param kind: ``"L"`` for lower bounds or ``"U"`` for upper bounds.
    """

    table: np.ndarray
    kind: str

    @property
    def q(self) -> int:
        return self.table.shape[0] - 1

    @classmethod
    def uninformative(cls, q: int, kind: str) -> "CondPmf":
        """The bound of an unresolved bundle: 0 for lower and q for upper bounds."""
        table = np.zeros((q + 1, q + 1))
        table[:, 0 if kind == "L" else q] = 1.0
        return cls(table, kind)

    def resolved(self) -> np.ndarray:
        """Probability that the bound equals the true value, for every ``z``."""
        return np.diag(self.table).copy()

    def violations(self, tol: float = 1e-12) -> list[str]:
        """
        Lists rows which do not sum to one or put mass on values the bound cannot take.
        """

        problems = []
        q = self.q

        for z in range(q + 1):
            row = self.table[z]
            if abs(row.sum() - 1.0) > tol:
                problems.append(f"row {z} sums to {row.sum():.15g}")
            if np.any(row < -tol):
                problems.append(f"row {z} has negative entries")
            outside = row[z + 1 :] if self.kind == "L" else row[:z]
            if np.any(np.abs(outside) > tol):
                problems.append(f"row {z} has mass outside the valid range")

        return problems

    def copy(self) -> "CondPmf":
        return CondPmf(self.table.copy(), self.kind)
