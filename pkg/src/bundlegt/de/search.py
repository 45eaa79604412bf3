"""
Threshold searches on top of density evolution.

:func:`gamma_threshold` finds the largest defect probability for which density
evolution succeeds at a fixed rate, :func:`min_rate` finds the smallest rate (largest
test degree) for which it succeeds at a fixed defect probability. Both assume that
success is monotone in the searched parameter. Defect probabilities and rates are given
and returned in percent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, asdict
from typing import Any, Sequence

from joblib import Parallel, delayed

from ..config import JsonConfig
from ..constants import (
    DEFAULT_DELTA_SUCCESS,
    DEFAULT_EPS_TAIL,
    DEFAULT_GAMMA_HI_PCT,
    DEFAULT_GAMMA_LO_PCT,
    DEFAULT_MAX_DC_MULTIPLE,
    DEFAULT_MAX_DE_ITERS,
    DEFAULT_NEIGHBOURHOOD,
    DEFAULT_TOLERANCE_PCT,
    TABLE1_DV,
    TABLE1_OMEGA_PCT,
    TABLE1_ROWS,
)
from ..exceptions import NoBracket, ParameterError
from ..utils import effective_jobs, fraction_to_pct, pct_to_fraction
from .engine import DeConfig, de_iterate


__all__ = [
    "DeOptions",
    "ThresholdResult",
    "Table1Entry",
    "gamma_threshold",
    "min_rate",
    "rate_curve",
    "table1_thresholds",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeOptions:
    """Numerical settings shared by all DE runs of a search."""

    eps_tail: float = DEFAULT_EPS_TAIL
    delta_success: float = DEFAULT_DELTA_SUCCESS
    max_de_iters: int = DEFAULT_MAX_DE_ITERS
    tolerance_pct: float = DEFAULT_TOLERANCE_PCT
    gamma_lo_pct: float = DEFAULT_GAMMA_LO_PCT
    gamma_hi_pct: float = DEFAULT_GAMMA_HI_PCT
    max_dc_multiple: int = DEFAULT_MAX_DC_MULTIPLE
    method: str = "enumerate"
    neighbourhood: str = DEFAULT_NEIGHBOURHOOD

    def __post_init__(self) -> None:
        if not 0 <= self.gamma_lo_pct < self.gamma_hi_pct <= 100:
            raise ParameterError(
                "Invalid search range",
                f"Need 0 <= gamma_lo_pct < gamma_hi_pct <= 100, got "
                f"[{self.gamma_lo_pct}, {self.gamma_hi_pct}].",
            )
        if self.max_dc_multiple < 2:
            raise ParameterError(
                "Invalid search range", "max_dc_multiple must be at least 2."
            )

    @classmethod
    def from_config(cls, conf: JsonConfig, method: str = "enumerate") -> "DeOptions":
        """Reads the ``de`` section of a run configuration."""
        return cls(
            method=method,
            eps_tail=conf.get("de", "eps_tail"),
            delta_success=conf.get("de", "delta_success"),
            max_de_iters=conf.get("de", "max_de_iters"),
            tolerance_pct=conf.get("de", "tolerance_pct"),
            gamma_lo_pct=conf.get("de", "gamma_lo_pct"),
            gamma_hi_pct=conf.get("de", "gamma_hi_pct"),
            max_dc_multiple=conf.get("de", "max_dc_multiple"),
            neighbourhood=conf.get("de", "neighbourhood"),
        )

    def make_config(
        self, q: int, d_v: int, d_vx: int, d_c: int, gamma: float = 0.0
    ) -> DeConfig:
        return DeConfig(
            q=q,
            gamma=gamma,
            d_v=d_v,
            d_vx=d_vx,
            d_c=d_c,
            eps_tail=self.eps_tail,
            delta_success=self.delta_success,
            max_de_iters=self.max_de_iters,
            tolerance_pct=self.tolerance_pct,
            method=self.method,
            neighbourhood=self.neighbourhood,
        )


@dataclass
class ThresholdResult:
    """
    Result of a threshold search.

    :param kind: ``"gamma"`` for a defect probability threshold or ``"omega"`` for a
        minimum rate.
    :param value: Threshold in percent. For ``"gamma"`` this is the largest tried
        defect probability with success, for ``"omega"`` the rate of the largest test
        degree with success.
    :param bracket: Final search interval in percent, the threshold lies inside.
    :param iters: Density evolution iterations at ``value``.
    :param d_c: Test degree at ``value``.
    :param config: Settings of the successful run at ``value``.
    """

    kind: str
    value: float
    bracket: tuple[float, float]
    iters: int
    d_c: int
    config: DeConfig

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["bracket"] = list(self.bracket)
        return data


def _succeeds(config: DeConfig) -> tuple[bool, int]:
    result = de_iterate(config)
    logger.debug(
        "gamma=%.5f%%, d_c=%s: %s after %s iterations",
        fraction_to_pct(config.gamma),
        config.d_c,
        "success" if result.success else "failure",
        result.iterations,
    )
    return result.success, result.iterations


def _succeeds_all(configs: Sequence[DeConfig], jobs: int) -> list[tuple[bool, int]]:
    if jobs == 1 or len(configs) == 1:
        return [_succeeds(c) for c in configs]
    return Parallel(n_jobs=jobs)(delayed(_succeeds)(c) for c in configs)


def gamma_threshold(
    q: int,
    d_v: int,
    d_vx: int,
    d_c: int,
    options: DeOptions | None = None,
    jobs: int = 1,
) -> ThresholdResult:
    """
    Searches the defect probability threshold by bisection. With ``jobs > 1``, every
    round tries ``jobs`` equally spaced points in parallel.

    :param q: Bundle size.
    :param d_v: Item degree.
    :param d_vx: Number of item-level tests per item.
    :param d_c: Test degree.
    :param options: Numerical settings and search range.
    :param jobs: Number of parallel DE runs per round.
    :returns: Threshold with a bracket no wider than the tolerance.
    :raises NoBracket: if density evolution fails at the lower end or succeeds at the
        upper end of the search range.
    """

    options = options or DeOptions()
    base = options.make_config(q, d_v, d_vx, d_c)
    jobs = effective_jobs(jobs)

    lo, hi = options.gamma_lo_pct, options.gamma_hi_pct
    (ok_lo, iters_lo), (ok_hi, _) = _succeeds_all(
        [base.with_gamma(pct_to_fraction(lo)), base.with_gamma(pct_to_fraction(hi))],
        jobs,
    )

    if not ok_lo:
        raise NoBracket(
            "Cannot bracket the threshold",
            f"Density evolution already fails at gamma={lo}% for q={q}, d_v={d_v}, "
            f"d_vx={d_vx}, d_c={d_c}.",
        )

    if ok_hi:
        raise NoBracket(
            "Cannot bracket the threshold",
            f"Density evolution still succeeds at gamma={hi}% for q={q}, d_v={d_v}, "
            f"d_vx={d_vx}, d_c={d_c}. Raise the upper end of the search.",
        )

    while hi - lo > options.tolerance_pct:

        step = (hi - lo) / (jobs + 1)
        points = [lo + step * (i + 1) for i in range(jobs)]
        outcomes = _succeeds_all(
            [base.with_gamma(pct_to_fraction(g)) for g in points], jobs
        )

        new_lo, new_hi = lo, hi

        for g, (ok, iters) in zip(points, outcomes):
            if ok:
                new_lo, iters_lo = g, iters
            else:
                new_hi = g
                break

        lo, hi = new_lo, new_hi

    logger.info(
        "q=%s, d_v=%s, d_vx=%s, d_c=%s: gamma_th in [%.4f, %.4f] %%",
        q,
        d_v,
        d_vx,
        d_c,
        lo,
        hi,
    )

    return ThresholdResult(
        kind="gamma",
        value=lo,
        bracket=(lo, hi),
        iters=iters_lo,
        d_c=d_c,
        config=base.with_gamma(pct_to_fraction(lo)),
    )


def min_rate(
    gamma_pct: float,
    q: int,
    d_v: int,
    d_vx: int,
    options: DeOptions | None = None,
) -> ThresholdResult:
    """
    Searches the largest test degree ``d_c``, a multiple of ``q``, for which density
    evolution succeeds. The minimum rate is ``d_v / d_c``.

    :param gamma_pct: Defect probability in percent.
    :param q: Bundle size.
    :param d_v: Item degree.
    :param d_vx: Number of item-level tests per item.
    :param options: Numerical settings and the largest multiple ``d_c / q`` tried.
    :returns: Minimum rate in percent. The bracket holds the rates of the last failing
        and the first succeeding test degree.
    :raises NoBracket: if density evolution fails for ``d_c = q`` or succeeds for the
        largest tried test degree.
    """

    options = options or DeOptions()
    gamma = pct_to_fraction(gamma_pct)

    def run(j: int) -> tuple[bool, int]:
        return _succeeds(options.make_config(q, d_v, d_vx, q * j, gamma))

    lo, hi = 1, options.max_dc_multiple
    ok_lo, iters_lo = run(lo)

    if not ok_lo:
        raise NoBracket(
            "Cannot bracket the minimum rate",
            f"Density evolution fails even for d_c={q} at gamma={gamma_pct}%.",
        )

    ok_hi, _ = run(hi)

    if ok_hi:
        raise NoBracket(
            "Cannot bracket the minimum rate",
            f"Density evolution still succeeds for d_c={q * hi} at gamma={gamma_pct}%. "
            "Raise max_dc_multiple.",
        )

    while hi - lo > 1:
        mid = (lo + hi) // 2
        ok, iters = run(mid)
        if ok:
            lo, iters_lo = mid, iters
        else:
            hi = mid

    d_c = q * lo

    return ThresholdResult(
        kind="omega",
        value=fraction_to_pct(d_v / d_c),
        bracket=(fraction_to_pct(d_v / (q * hi)), fraction_to_pct(d_v / d_c)),
        iters=iters_lo,
        d_c=d_c,
        config=options.make_config(q, d_v, d_vx, d_c, gamma),
    )


def rate_curve(
    gammas_pct: Sequence[float],
    q: int,
    d_v: int,
    d_vx: int,
    options: DeOptions | None = None,
    jobs: int = 1,
) -> list[ThresholdResult]:
    """Runs :func:`min_rate` for every defect probability, in parallel."""

    jobs = effective_jobs(jobs)

    if jobs == 1:
        return [min_rate(g, q, d_v, d_vx, options) for g in gammas_pct]

    return Parallel(n_jobs=jobs)(
        delayed(min_rate)(g, q, d_v, d_vx, options) for g in gammas_pct
    )


@dataclass
class Table1Entry:
    q: int
    d_vx: int
    d_v: int
    result: ThresholdResult


def _table1_cells(
    qs: Sequence[int] | None, dvs: Sequence[int] | None
) -> list[tuple[int, int, int, int]]:

    cells = []

    for q, d_vx in TABLE1_ROWS:
        if qs and q not in qs:
            continue
        for d_v in TABLE1_DV:
            if dvs and d_v not in dvs:
                continue
            # test degree of the 5% rate
            d_c = round(d_v / pct_to_fraction(TABLE1_OMEGA_PCT))
            cells.append((q, d_v if d_vx is None else d_vx, d_v, d_c))

    return cells


def _table1_cell(
    cell: tuple[int, int, int, int], options: DeOptions | None
) -> Table1Entry:
    q, d_vx, d_v, d_c = cell
    return Table1Entry(q, d_vx, d_v, gamma_threshold(q, d_v, d_vx, d_c, options))


def table1_thresholds(
    qs: Sequence[int] | None = None,
    dvs: Sequence[int] | None = None,
    options: DeOptions | None = None,
    jobs: int = 1,
) -> list[Table1Entry]:
    """
    Computes defect probability thresholds at a rate of 5% for the bundle sizes and
    item degrees of the reference table.

    :param qs: Restricts the bundle sizes.
    :param dvs: Restricts the item degrees.
    :param options: Numerical settings.
    :param jobs: Number of cells computed in parallel.
    :returns: One entry per cell in row order.
    """

    cells = _table1_cells(qs, dvs)

    jobs = effective_jobs(jobs)

    if jobs == 1:
        return [_table1_cell(c, options) for c in cells]

    return Parallel(n_jobs=jobs)(delayed(_table1_cell)(c, options) for c in cells)
