"""
Monte Carlo estimation of misdetection rates.

Every trial draws a graph from the ensemble (or reuses a fixed one), a population and
its syndrome, decodes and compares the declared set with the truth. Trial ``t`` of a
run with master seed ``s`` uses the seed sequence ``(s, t)`` for both the graph and the
population, independently of the defect probability. Results therefore do not depend
on the order or the number of workers which execute the trials, and populations are
nested across defect probabilities.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Any, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import binomtest, norm
from tqdm import tqdm

from .constants import (
    CROSSCHECK_FAIL_SIGMA,
    DEFAULT_EPS_TAIL,
    DEFAULT_MAX_ITERS,
    DEFAULT_REPAIR_FACTOR,
    SIM_CSV_COLUMNS,
)
from .de.engine import DeConfig, DeState, de_iterate
from .decoder import Decoder, classify, decode
from .exceptions import ParameterError
from .graph import AugmentedGraph, GtParams, build_graph
from .model import bundle_values, compute_syndrome, sample_population, trial_seed
from .utils import chunks, effective_jobs, fraction_to_pct


__all__ = [
    "SimConfig",
    "TrialOutcome",
    "SimRow",
    "SimResult",
    "CrosscheckEntry",
    "CrosscheckReport",
    "run_trial",
    "run_point",
    "sweep",
    "write_csv",
    "write_json",
    "de_crosscheck",
]

logger = logging.getLogger(__name__)

CHUNK_SIZE = 16


# ==== configuration ===================================================================


@dataclass(frozen=True)
class SimConfig:
    """
    Settings of a simulation sweep.

    :param params: Ensemble parameters.
    :param gamma_grid: Defect probabilities as fractions.
    :param trials: Trials per defect probability.
    :param master_seed: Seed of record.
    :param max_iters: Decoder iteration cap.
    :param fresh_graph_per_trial: Draw a new graph for every trial. Otherwise a single
        graph derived from the master seed is used for all trials.
    :param distinct_bundles_per_test: Forbid two items of a bundle in one test.
    :param repair_factor: Swap attempts per edge of the graph construction.
    """

    params: GtParams
    gamma_grid: tuple[float, ...]
    trials: int
    master_seed: int
    max_iters: int = DEFAULT_MAX_ITERS
    fresh_graph_per_trial: bool = True
    distinct_bundles_per_test: bool = False
    repair_factor: int = DEFAULT_REPAIR_FACTOR

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ParameterError("Invalid trial count", "trials must be at least 1.")
        for gamma in self.gamma_grid:
            if not 0.0 < gamma < 1.0:
                raise ParameterError(
                    "Invalid defect probability", f"gamma={gamma} is not in (0, 1)."
                )

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["params"] = self.params.to_dict()
        data["gamma_grid"] = list(self.gamma_grid)
        return data


# ==== trials ==========================================================================


@dataclass
class TrialOutcome:
    defectives: int
    misdetected: int
    false_alarms: int
    unresolved: int
    iterations: int
    converged: bool


def _trial_graph(
    params: GtParams,
    seed: np.random.SeedSequence,
    distinct_bundles_per_test: bool,
    repair_factor: int,
) -> AugmentedGraph:
    return build_graph(
        params,
        seed=seed,
        distinct_bundles_per_test=distinct_bundles_per_test,
        repair_factor=repair_factor,
    )


def run_trial(
    params: GtParams,
    gamma: float,
    master_seed: int,
    index: int,
    graph: AugmentedGraph | None = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    distinct_bundles_per_test: bool = False,
    repair_factor: int = DEFAULT_REPAIR_FACTOR,
) -> TrialOutcome:
    """
    Runs a single trial.

    :param params: Ensemble parameters.
    :param gamma: Defect probability as a fraction.
    :param master_seed: Seed of record.
    :param index: Trial index.
    :param graph: Fixed graph. If ``None``, a graph is drawn for this trial.
    :param max_iters: Decoder iteration cap.
    :returns: Counts of the trial.
    :raises InconsistentSyndrome: never for a correct decoder.
    """

    graph_seed, population_seed = trial_seed(master_seed, index).spawn(2)

    if graph is None:
        graph = _trial_graph(
            params, graph_seed, distinct_bundles_per_test, repair_factor
        )

    population = sample_population(params.n, gamma, population_seed)
    syndrome = compute_syndrome(graph, population.x)
    outcome = decode(graph, syndrome, max_iters=max_iters)
    metrics = classify(outcome, population.x)

    return TrialOutcome(
        defectives=metrics.defectives,
        misdetected=metrics.misdetected,
        false_alarms=metrics.false_alarms,
        unresolved=metrics.unresolved,
        iterations=outcome.iterations,
        converged=outcome.converged,
    )


def _run_chunk(
    params: GtParams,
    gamma: float,
    master_seed: int,
    indices: Sequence[int],
    graph: AugmentedGraph | None,
    max_iters: int,
    distinct_bundles_per_test: bool,
    repair_factor: int,
) -> list[TrialOutcome]:
    return [
        run_trial(
            params,
            gamma,
            master_seed,
            i,
            graph,
            max_iters,
            distinct_bundles_per_test,
            repair_factor,
        )
        for i in indices
    ]


# ==== aggregation =====================================================================


@dataclass
class SimRow:
    """
    Statistics of all trials at one defect probability. The misdetection rate is the
    ratio of misdetected to defective items summed over all trials which contain at
    least one defective, and ``se`` its standard error from the spread of the per-trial
    counts (``nan`` with fewer than two such trials).
    """

    gamma: float
    trials: int
    defectives: int
    misdetected: int
    misdetection_rate: float
    se: float
    false_alarms: int
    false_alarm_rate: float
    unresolved: float
    mean_iters: float
    zero_defective_trials: int = 0
    not_converged: int = 0

    def to_csv_row(self) -> dict[str, str]:
        values = {
            "gamma": f"{fraction_to_pct(self.gamma):.10g}",
            "trials": str(self.trials),
            "defectives": str(self.defectives),
            "misdetected": str(self.misdetected),
            "misdetection_rate": f"{self.misdetection_rate:.10g}",
            "se": f"{self.se:.10g}",
            "false_alarms": str(self.false_alarms),
            "unresolved": f"{self.unresolved:.10g}",
            "mean_iters": f"{self.mean_iters:.10g}",
        }
        return {key: values[key] for key in SIM_CSV_COLUMNS}


def _aggregate(gamma: float, n: int, outcomes: Sequence[TrialOutcome]) -> SimRow:

    d = np.array([o.defectives for o in outcomes], dtype=float)
    m = np.array([o.misdetected for o in outcomes], dtype=float)

    used = d > 0
    total_d = d[used].sum()
    rate = float(m[used].sum() / total_d) if total_d else 0.0

    k = int(used.sum())

    if k >= 2:
        resid = m[used] - rate * d[used]
        se = math.sqrt((resid**2).sum() / (k * (k - 1))) / d[used].mean()
    else:
        se = math.nan

    negatives = len(outcomes) * n - int(d.sum())
    false_alarms = sum(o.false_alarms for o in outcomes)

    return SimRow(
        gamma=gamma,
        trials=len(outcomes),
        defectives=int(d.sum()),
        misdetected=int(m.sum()),
        misdetection_rate=rate,
        se=se,
        false_alarms=false_alarms,
        false_alarm_rate=false_alarms / negatives if negatives else 0.0,
        unresolved=float(np.mean([o.unresolved / n for o in outcomes])),
        mean_iters=float(np.mean([o.iterations for o in outcomes])),
        zero_defective_trials=len(outcomes) - k,
        not_converged=sum(not o.converged for o in outcomes),
    )


def run_point(
    params: GtParams,
    gamma: float,
    trials: int,
    master_seed: int,
    max_iters: int = DEFAULT_MAX_ITERS,
    graph: AugmentedGraph | None = None,
    jobs: int = 1,
    progress: bool = False,
    distinct_bundles_per_test: bool = False,
    repair_factor: int = DEFAULT_REPAIR_FACTOR,
) -> SimRow:
    """
    Estimates the misdetection rate at a single defect probability.

    :param params: Ensemble parameters.
    :param gamma: Defect probability as a fraction.
    :param trials: Number of trials.
    :param master_seed: Seed of record.
    :param max_iters: Decoder iteration cap.
    :param graph: Fixed graph for all trials. If ``None``, every trial draws its own.
    :param jobs: Number of parallel workers.
    :param progress: Show a progress bar on stderr.
    :returns: Aggregated statistics. The result does not depend on ``jobs``.
    """

    jobs = effective_jobs(jobs)
    batches = list(chunks(range(trials), CHUNK_SIZE))
    args = (graph, max_iters, distinct_bundles_per_test, repair_factor)

    bar = tqdm(
        total=trials,
        desc=f"gamma={fraction_to_pct(gamma):.4g}%",
        disable=not progress,
        leave=False,
    )

    outcomes: list[TrialOutcome] = []

    with bar:
        if jobs == 1:
            for batch in batches:
                outcomes.extend(_run_chunk(params, gamma, master_seed, batch, *args))
                bar.update(len(batch))
        else:
            results = Parallel(n_jobs=jobs, return_as="generator")(
                delayed(_run_chunk)(params, gamma, master_seed, batch, *args)
                for batch in batches
            )
            for result in results:
                outcomes.extend(result)
                bar.update(len(result))

    row = _aggregate(gamma, params.n, outcomes)

    if row.zero_defective_trials:
        logger.info(
            "gamma=%.4g%%: %s of %s trials without defectives excluded from the rate",
            fraction_to_pct(gamma),
            row.zero_defective_trials,
            trials,
        )

    if row.not_converged:
        logger.warning(
            "gamma=%.4g%%: %s trials reached the iteration cap of %s",
            fraction_to_pct(gamma),
            row.not_converged,
            max_iters,
        )

    if row.false_alarms:
        logger.error(
            "gamma=%.4g%%: %s false alarms in noiseless decoding",
            fraction_to_pct(gamma),
            row.false_alarms,
        )

    return row


@dataclass
class SimResult:
    config: SimConfig
    rows: list[SimRow] = field(default_factory=list)
    waterfall_violations: list[tuple[float, float]] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        """Whether misdetection is non-decreasing in gamma up to two standard errors."""
        return not self.waterfall_violations

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "rows": [asdict(r) for r in self.rows],
            "waterfall_violations": [list(v) for v in self.waterfall_violations],
        }


def _waterfall_violations(rows: Sequence[SimRow]) -> list[tuple[float, float]]:

    ordered = sorted(rows, key=lambda r: r.gamma)
    violations = []

    for a, b in zip(ordered, ordered[1:]):
        if b.gamma == a.gamma or math.isnan(a.se) or math.isnan(b.se):
            continue
        if b.misdetection_rate < a.misdetection_rate - 2 * math.hypot(a.se, b.se):
            violations.append((a.gamma, b.gamma))

    return violations


def sweep(config: SimConfig, jobs: int = 1, progress: bool = False) -> SimResult:
    """
    Runs :func:`run_point` for every defect probability of the grid.

    :param config: Sweep settings.
    :param jobs: Number of parallel workers.
    :param progress: Show progress bars on stderr.
    :returns: One row per grid entry, in grid order.
    """

    graph = None

    if not config.fresh_graph_per_trial:
        graph = _trial_graph(
            config.params,
            np.random.SeedSequence(config.master_seed),
            config.distinct_bundles_per_test,
            config.repair_factor,
        )

    rows = [
        run_point(
            config.params,
            gamma,
            config.trials,
            config.master_seed,
            max_iters=config.max_iters,
            graph=graph,
            jobs=jobs,
            progress=progress,
            distinct_bundles_per_test=config.distinct_bundles_per_test,
            repair_factor=config.repair_factor,
        )
        for gamma in config.gamma_grid
    ]

    violations = _waterfall_violations(rows)

    for lo, hi in violations:
        logger.warning(
            "Misdetection drops between gamma=%.4g%% and %.4g%% beyond two standard "
            "errors",
            fraction_to_pct(lo),
            fraction_to_pct(hi),
        )

    return SimResult(config=config, rows=rows, waterfall_violations=violations)


def write_csv(result: SimResult, path: str) -> None:
    """Writes one line per row. Defect probabilities are written in percent."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=SIM_CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in result.rows:
            writer.writerow(row.to_csv_row())


def write_json(
    result: SimResult, path: str, snapshot: dict[str, Any] | None = None
) -> None:
    """
    Writes the rows together with the sweep settings.

    :param result: Sweep result.
    :param path: Output path.
    :param snapshot: Run configuration to embed.
    """

    data = result.to_dict()
    data["run_config"] = snapshot or {}

    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True, allow_nan=True)
        f.write("\n")


# ==== density evolution cross-check ===================================================


@dataclass
class CrosscheckEntry:
    family: str
    condition: str
    count: int
    empirical: float
    predicted: float
    zscore: float


@dataclass
class CrosscheckReport:
    """
    Empirical message statistics after ``ell`` decoder iterations compared with the
    density evolution prediction for the same iteration.
    """

    ell: int
    trials: int
    entries: list[CrosscheckEntry] = field(default_factory=list)
    fail_sigma: float = CROSSCHECK_FAIL_SIGMA

    @property
    def max_abs_z(self) -> float:
        return max((abs(e.zscore) for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_abs_z <= self.fail_sigma

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict[str, Any]:
        return {
            "ell": self.ell,
            "trials": self.trials,
            "verdict": self.verdict,
            "max_abs_z": self.max_abs_z,
            "entries": [asdict(e) for e in self.entries],
        }


def _zscore(successes: int, count: int, p: float) -> float:
    """
    Signed deviation of an observed frequency from ``p`` in standard errors. For small
    expected counts the exact binomial test is converted to an equivalent z-score.
    """

    p = min(max(p, 0.0), 1.0)
    diff = successes / count - p

    if p in (0.0, 1.0):
        return 0.0 if successes == round(p * count) else math.copysign(math.inf, diff)

    if count * min(p, 1 - p) >= 5:
        return diff / math.sqrt(p * (1 - p) / count)

    pvalue = binomtest(successes, count, p).pvalue
    return math.copysign(float(norm.isf(pvalue / 2)), diff) if diff else 0.0


_ITEM_KEYS = ("pL_cx", "pU0_cx", "pL_fx", "pU0_fx")


class _Tally:
    def __init__(self, q: int) -> None:
        self.L_cz = np.zeros((q + 1, q + 1), dtype=np.int64)
        self.U_cz = np.zeros((q + 1, q + 1), dtype=np.int64)
        self.items = {k: np.zeros(2, dtype=np.int64) for k in _ITEM_KEYS}

    def add(self, decoder: Decoder, x: np.ndarray, z: np.ndarray) -> None:

        st = decoder.state
        graph = decoder.graph

        z_edges = z[graph.cn_z].ravel()
        np.add.at(self.L_cz, (z_edges, st.L_cz.ravel()), 1)
        np.add.at(self.U_cz, (z_edges, st.U_cz.ravel()), 1)

        x_edges = x[graph.cn_x].ravel().astype(bool)
        defective = x.astype(bool)

        self._count("pL_cx", st.L_cx.ravel()[x_edges] == 1)
        self._count("pU0_cx", st.U_cx.ravel()[~x_edges] == 0)
        self._count("pL_fx", st.L_fx[defective] == 1)
        self._count("pU0_fx", st.U_fx[~defective] == 0)

    def _count(self, key: str, hits: np.ndarray) -> None:
        self.items[key] += (int(hits.sum()), len(hits))


def _compare(tally: _Tally, predicted: DeState, report: CrosscheckReport) -> None:

    for name in ("L_cz", "U_cz"):
        counts = getattr(tally, name)
        table = getattr(predicted, name).table
        for z in range(counts.shape[0]):
            total = int(counts[z].sum())
            if total == 0:
                continue
            for v in range(counts.shape[1]):
                report.entries.append(
                    CrosscheckEntry(
                        family=name,
                        condition=f"Z={z}, value={v}",
                        count=total,
                        empirical=counts[z, v] / total,
                        predicted=float(table[z, v]),
                        zscore=_zscore(int(counts[z, v]), total, float(table[z, v])),
                    )
                )

    for key in _ITEM_KEYS:
        hits, total = (int(c) for c in tally.items[key])
        if total == 0:
            continue
        p = float(getattr(predicted, key))
        report.entries.append(
            CrosscheckEntry(
                family=key,
                condition="X=1" if key.startswith("pL") else "X=0",
                count=total,
                empirical=hits / total,
                predicted=p,
                zscore=_zscore(hits, total, p),
            )
        )


def de_crosscheck(
    params: GtParams,
    gamma: float,
    ell: int,
    trials: int,
    seed: int,
    eps_tail: float = DEFAULT_EPS_TAIL,
    neighbourhood: str = "edge",
    progress: bool = False,
) -> CrosscheckReport:
    """
    Runs the decoder for ``ell`` iterations on random instances and compares the
    frequencies of bundle-level test messages per true bundle value and of confirming
    and clearing item messages with the density evolution prediction.

    :param params: Ensemble parameters. Large ``n`` keeps short cycles rare.
    :param gamma: Defect probability as a fraction.
    :param ell: Number of iterations.
    :param trials: Number of random instances, each with a fresh graph.
    :param seed: Master seed.
    :param eps_tail: Neglected syndrome mass of the prediction.
    :param neighbourhood: Averaging of bundle-level test messages in the prediction.
        The default follows the message of a single edge, which is what the decoder
        produces on a tree.
    :param progress: Show a progress bar on stderr.
    :returns: Report with one z-score per compared probability. The verdict is FAIL if
        any deviation exceeds five standard errors.
    """

    if ell < 0:
        raise ParameterError("Invalid iteration", "ell must not be negative.")

    config = DeConfig(
        q=params.q,
        gamma=gamma,
        d_v=params.d_v,
        d_vx=params.d_vx,
        d_c=params.d_c,
        eps_tail=eps_tail,
        neighbourhood=neighbourhood,
    )
    trajectory = de_iterate(
        config, trajectory=True, max_iters=max(ell, 1), stop_on_success=False
    ).trajectory
    predicted = trajectory[min(ell, len(trajectory) - 1)]

    tally = _Tally(params.q)

    for t in tqdm(range(trials), desc="crosscheck", disable=not progress, leave=False):
        graph_seed, population_seed = trial_seed(seed, t).spawn(2)
        graph = build_graph(params, seed=graph_seed)
        population = sample_population(params.n, gamma, population_seed)
        decoder = Decoder(graph, compute_syndrome(graph, population.x))

        for _ in range(ell):
            decoder.step()

        tally.add(decoder, population.x, bundle_values(graph, population.x))

    report = CrosscheckReport(ell=ell, trials=trials)
    _compare(tally, predicted, report)

    logger.info(
        "Crosscheck at iteration %s: largest deviation %.2f standard errors, %s",
        ell,
        report.max_abs_z,
        report.verdict,
    )

    return report
