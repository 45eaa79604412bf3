"""
Density evolution for the bundle-augmented ensemble.

The recursion tracks the distribution of every message family of the bound propagation
decoder on a cycle free neighbourhood, using the same update schedule as
:class:`bundlegt.decoder.Decoder`. Bundle-side messages are described by pmfs
conditioned on the true number of defectives ``Z`` of the bundle they refer to, see
:class:`bundlegt.de.pmf.CondPmf`. Item-side messages are binary, and only two
probabilities per family are needed: the probability ``pL`` that a defective item is
confirmed (lower bound 1) and the probability ``pU0`` that a non-defective item is
cleared (upper bound 0). Lower bounds of non-defective items and upper bounds of
defective items never carry information and are not tracked.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields, replace, asdict
from typing import Any

import numpy as np
from scipy.stats import binom

from ..constants import (
    DEFAULT_DELTA_SUCCESS,
    DEFAULT_EPS_TAIL,
    DEFAULT_MAX_DE_ITERS,
    DEFAULT_NEIGHBOURHOOD,
    DEFAULT_TOLERANCE_PCT,
    NEIGHBOURHOODS,
)
from ..exceptions import DivisibilityError, ParameterError
from .pmf import (
    CondPmf,
    binomial_pmf,
    delta,
    enumerate_multisets,
    multinomial_logweight,
    order_stat_max,
    order_stat_min,
    pmf_convolve,
    pmf_max2,
    pmf_min2,
    pmf_power,
    syndrome_cutoff,
)


__all__ = [
    "DeConfig",
    "DeState",
    "DeResult",
    "DensityEvolution",
    "init_de_state",
    "de_test_bundle",
    "de_bundle_side",
    "de_item_bundle",
    "de_test_item",
    "de_iterate",
]

logger = logging.getLogger(__name__)

METHODS = ("enumerate", "mixture")

# Largest change of any tracked probability below which the recursion has settled.
STALL_TOLERANCE = 1e-15


# ==== configuration ===================================================================


@dataclass(frozen=True)
class DeConfig:
    """
    Ensemble and numerical settings of a density evolution run.

    :param q: Bundle size.
    :param gamma: Defect probability as a fraction.
    :param d_v: Item degree.
    :param d_vx: Number of item-level tests per item.
    :param d_c: Test degree in items.
    :param eps_tail: Probability mass of bundle-level test results which is neglected
        when averaging over test neighbourhoods.
    :param delta_success: Largest residual probability of an unresolved item which
        still counts as success.
    :param max_de_iters: Iteration cap.
    :param tolerance_pct: Bracket width at which threshold searches stop, in percent.
    :param method: ``"enumerate"`` averages over multisets of bundle values with a
        truncated syndrome tail. ``"mixture"`` evaluates the same average in closed form
        without truncation.
    :param neighbourhood: How bundle-level test messages are averaged over the
        bundle values of a test. ``"test"`` draws the values of all ``d_cz`` bundles of
        the test and lets any bundle of value ``z`` receive the message, so the other
        bundles follow the test's law given that it contains a bundle of value ``z``.
        ``"edge"`` fixes the receiving bundle and draws the other ``d_cz - 1`` bundles
        independently, which is the law of a single edge of a random graph.
    """

    q: int
    gamma: float
    d_v: int
    d_vx: int
    d_c: int
    eps_tail: float = DEFAULT_EPS_TAIL
    delta_success: float = DEFAULT_DELTA_SUCCESS
    max_de_iters: int = DEFAULT_MAX_DE_ITERS
    tolerance_pct: float = DEFAULT_TOLERANCE_PCT
    method: str = "enumerate"
    neighbourhood: str = DEFAULT_NEIGHBOURHOOD

    def __post_init__(self) -> None:

        for name in ("q", "d_v", "d_vx", "d_c", "max_de_iters"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ParameterError(
                    "Invalid parameter", f"{name} must be a positive integer."
                )

        if self.d_vx > self.d_v:
            raise ParameterError(
                "Invalid parameter", f"d_vx={self.d_vx} exceeds d_v={self.d_v}."
            )

        if self.d_c % self.q != 0:
            raise DivisibilityError(
                "Invalid parameter",
                f"The bundle size q={self.q} must divide d_c={self.d_c} (q | d_c).",
                constraint="q | d_c",
            )

        if not 0.0 <= self.gamma <= 1.0:
            raise ParameterError(
                "Invalid defect probability", f"gamma={self.gamma} is not in [0, 1]."
            )

        for name in ("eps_tail", "delta_success"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ParameterError("Invalid parameter", f"{name} must be in (0, 1).")

        if self.tolerance_pct <= 0:
            raise ParameterError("Invalid parameter", "tolerance_pct must be positive.")

        if self.method not in METHODS:
            raise ParameterError(
                "Invalid parameter",
                f"Unknown method '{self.method}', choose from {', '.join(METHODS)}.",
            )

        if self.neighbourhood not in NEIGHBOURHOODS:
            raise ParameterError(
                "Invalid parameter",
                f"Unknown neighbourhood '{self.neighbourhood}', choose from "
                f"{', '.join(NEIGHBOURHOODS)}.",
            )

    @property
    def d_vz(self) -> int:
        return self.d_v - self.d_vx

    @property
    def d_cz(self) -> int:
        return self.d_c // self.q

    @property
    def omega(self) -> float:
        """Rate of the ensemble, the number of tests per item, as a fraction."""
        return self.d_v / self.d_c

    def with_gamma(self, gamma: float) -> "DeConfig":
        return replace(self, gamma=gamma)

    def with_dc(self, d_c: int) -> "DeConfig":
        return replace(self, d_c=d_c)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


# ==== state ===========================================================================


@dataclass
class DeState:
    """
    Distribution of all message families after some number of iterations. The family
    names follow :class:`bundlegt.decoder.DecoderState`.
    """

    L_cz: CondPmf
    U_cz: CondPmf
    L_zc: CondPmf
    U_zc: CondPmf
    L_zf: CondPmf
    U_zf: CondPmf
    L_fz: CondPmf
    U_fz: CondPmf
    pL_fx: float = 0.0
    pU0_fx: float = 0.0
    pL_xf: float = 0.0
    pU0_xf: float = 0.0
    pL_cx: float = 0.0
    pU0_cx: float = 0.0
    pL_xc: float = 0.0
    pU0_xc: float = 0.0
    iteration: int = 0

    BUNDLE_FAMILIES = ("cz", "zc", "zf", "fz")
    ITEM_FAMILIES = ("fx", "xf", "cx", "xc")

    def cond_pmfs(self) -> list[tuple[str, CondPmf]]:
        return [
            (f"{kind}_{name}", getattr(self, f"{kind}_{name}"))
            for name in self.BUNDLE_FAMILIES
            for kind in ("L", "U")
        ]

    def item_probs(self) -> dict[str, float]:
        return {
            f"{kind}_{name}": getattr(self, f"{kind}_{name}")
            for name in self.ITEM_FAMILIES
            for kind in ("pL", "pU0")
        }

    def copy(self) -> "DeState":
        values = {}
        for f in fields(self):
            value = getattr(self, f.name)
            values[f.name] = value.copy() if isinstance(value, CondPmf) else value
        return DeState(**values)

    def max_change(self, other: "DeState") -> float:
        """Largest absolute difference of any tracked probability."""
        diffs = [
            float(np.abs(a.table - b.table).max())
            for (_, a), (_, b) in zip(self.cond_pmfs(), other.cond_pmfs())
        ]
        mine = self.item_probs()
        theirs = other.item_probs()
        diffs.extend(abs(mine[k] - theirs[k]) for k in mine)
        return max(diffs)


def init_de_state(q: int) -> DeState:
    """Returns the distribution of the initial, uninformative messages."""
    pmfs = {
        f"{kind}_{name}": CondPmf.uninformative(q, kind)
        for name in DeState.BUNDLE_FAMILIES
        for kind in ("L", "U")
    }
    return DeState(**pmfs)


# ==== recursion =======================================================================


class DensityEvolution:
    """
    Density evolution recursion for a single configuration. Call :meth:`step` to run
    one iteration.

    :param config: Ensemble and numerical settings.
    """

    def __init__(self, config: DeConfig) -> None:

        self.config = config
        self.q = q = config.q
        self.state = init_de_state(q)

        gamma = config.gamma
        z = np.arange(q + 1)

        # law of the number of defectives in a bundle, unconditionally and given the
        # status of one of its items
        self.p_z = binomial_pmf(q, gamma)
        self.p_z_defective = np.where(z >= 1, binom.pmf(z - 1, q - 1, gamma), 0.0)
        self.p_z_clean = np.where(z <= q - 1, binom.pmf(z, q - 1, gamma), 0.0)

        self.k = config.d_cz - 1  # other bundles of a bundle-level test
        self.size = self.k * q + 1
        self.by_test = config.neighbourhood == "test"

        # probability that a bundle-level test contains a bundle of value z
        with np.errstate(divide="ignore"):
            self.p_member = -np.expm1(config.d_cz * np.log1p(-self.p_z))

        self.t_max = 0
        self.tail_mass = 0.0
        self._multisets: list[tuple[np.ndarray, int, float]] = []

        if config.d_vz > 0 and config.method == "enumerate":
            self._prepare_multisets()

    def _prepare_multisets(self) -> None:

        cfg = self.config
        allowed = self.p_z > 0

        with np.errstate(divide="ignore"):
            log_p = np.where(allowed, np.log(np.where(allowed, self.p_z, 1.0)), -np.inf)

        self.t_max = syndrome_cutoff(cfg.d_c, cfg.gamma, cfg.eps_tail)
        values = np.arange(self.q + 1)
        members = self.k + 1 if self.by_test else self.k

        for counts in enumerate_multisets(members, self.q, self.t_max, allowed):
            weight = math.exp(multinomial_logweight(counts, log_p))
            self._multisets.append((counts, int(counts @ values), weight))

        self.tail_mass = max(0.0, 1.0 - sum(w for _, _, w in self._multisets))

        logger.debug(
            "%s bundle value multisets up to sum %s, neglected mass %.3g",
            len(self._multisets),
            self.t_max,
            self.tail_mass,
        )

    # ---- test to bundle --------------------------------------------------------------

    def _sums_enumerate(self, table: np.ndarray) -> np.ndarray:
        """
        For every value ``z`` of the receiving bundle and every sum ``t`` of the other
        bundle values, the weighted pmf of the sum of bounds sent by the other bundles.
        Entry ``[z, t]`` carries the probability of all neighbourhoods with that sum.
        """

        powers: dict[tuple[int, int], np.ndarray] = {}

        def others(counts: np.ndarray) -> np.ndarray:
            total = np.ones(1)
            for v in np.flatnonzero(counts):
                key = (int(v), int(counts[v]))
                if key not in powers:
                    powers[key] = pmf_power(table[v], key[1], self.size)
                total = pmf_convolve(total, powers[key], self.size)
            return pmf_convolve(total, np.ones(1), self.size)

        mix = np.zeros((self.q + 1, self.t_max + 1, self.size))

        if not self.by_test:
            for counts, t, weight in self._multisets:
                mix[:, t] += weight * others(counts)
            return mix

        for counts, t, weight in self._multisets:
            for z in np.flatnonzero(counts):
                rest = counts.copy()
                rest[z] -= 1
                mix[z, t - z] += weight * others(rest)

        # condition on the test containing a bundle of value z
        norm = np.where(self.p_member > 0, self.p_member, 1.0)
        return mix / norm[:, None, None]

    def _test_bundle_enumerate(self) -> tuple[np.ndarray, np.ndarray]:

        st = self.state
        q = self.q
        mix_u = self._sums_enumerate(st.U_zc.table)
        mix_l = self._sums_enumerate(st.L_zc.table)
        ts = np.arange(self.t_max + 1)

        L = np.zeros((q + 1, q + 1))
        U = np.zeros((q + 1, q + 1))

        for z in range(q + 1):

            # L = max(z + t - sum of others' upper bounds, 0)
            for i in range(1, z + 1):
                idx = z + ts - i
                ok = idx < self.size
                L[z, i] = mix_u[z, ts[ok], idx[ok]].sum()
            L[z, 0] = max(0.0, 1.0 - L[z, 1:].sum())

            # U = min(z + t - sum of others' lower bounds, q)
            for i in range(z, q):
                idx = z + ts - i
                ok = (idx >= 0) & (idx < self.size)
                U[z, i] = mix_l[z, ts[ok], idx[ok]].sum()
            U[z, q] = max(0.0, 1.0 - U[z, z:q].sum())

        return L, U

    def _slack(self, table: np.ndarray, kind: str) -> np.ndarray:
        """Row ``v`` is the pmf of the distance of a bound from the true value ``v``."""

        q = self.q
        slack = np.zeros((q + 1, q + 1))

        for v in range(q + 1):
            if kind == "U":
                slack[v, : q + 1 - v] = table[v, v:]
            else:
                slack[v, : v + 1] = table[v, v::-1]

        return slack

    def _sums_mixture(self, slack: np.ndarray) -> np.ndarray:
        """
        For every value ``z`` of the receiving bundle, the pmf of the total slack of the
        bounds sent by the other bundles.
        """

        q, k, size = self.q, self.k, self.size
        sums = np.zeros((q + 1, size))

        if not self.by_test:
            sums[:] = pmf_power(self.p_z @ slack, k, size)
            return sums

        for z in range(q + 1):
            if self.p_member[z] == 0:
                continue

            rest = self.p_z.copy()
            rest[z] = 0.0
            rest_mass = rest.sum()
            rest_slack = rest @ slack / rest_mass if rest_mass > 0 else delta(0, q + 1)

            # number of further bundles of value z, given the test contains one
            same = binom.pmf(np.arange(1, k + 2), k + 1, self.p_z[z]) / self.p_member[z]

            own = [delta(0, size)]
            other = [delta(0, size)]
            for _ in range(k):
                own.append(pmf_convolve(own[-1], slack[z], size))
                other.append(pmf_convolve(other[-1], rest_slack, size))

            for j in np.flatnonzero(same):
                sums[z] += same[j] * pmf_convolve(own[j], other[k - j], size)

        return sums

    def _test_bundle_mixture(self) -> tuple[np.ndarray, np.ndarray]:

        st = self.state
        q = self.q
        sum_u = self._sums_mixture(self._slack(st.U_zc.table, "U"))
        sum_l = self._sums_mixture(self._slack(st.L_zc.table, "L"))

        L = np.zeros((q + 1, q + 1))
        U = np.zeros((q + 1, q + 1))

        for z in range(q + 1):
            for i in range(1, z + 1):
                L[z, i] = sum_u[z, z - i] if z - i < self.size else 0.0
            L[z, 0] = max(0.0, 1.0 - L[z, 1:].sum())

            for i in range(z, q):
                U[z, i] = sum_l[z, i - z] if i - z < self.size else 0.0
            U[z, q] = max(0.0, 1.0 - U[z, z:q].sum())

        return L, U

    def update_cz_to_z(self) -> None:
        if self.config.d_vz == 0:
            return
        if self.config.method == "mixture":
            L, U = self._test_bundle_mixture()
        else:
            L, U = self._test_bundle_enumerate()
        self.state.L_cz = CondPmf(L, "L")
        self.state.U_cz = CondPmf(U, "U")

    # ---- bundle side -----------------------------------------------------------------

    def update_z_to_f(self) -> None:
        st = self.state
        d_vz = self.config.d_vz
        st.L_zf = CondPmf(order_stat_max(st.L_cz.table, d_vz), "L")
        st.U_zf = CondPmf(order_stat_min(st.U_cz.table, d_vz), "U")

    def update_f_to_z(self) -> None:
        st = self.state
        q = self.q
        z = np.arange(q + 1)[:, None]
        v = np.arange(q + 1)[None, :]
        st.L_fz = CondPmf(binom.pmf(v, z, st.pL_xf), "L")
        st.U_fz = CondPmf(binom.pmf(v - z, q - z, 1.0 - st.pU0_xf), "U")

    def update_z_to_cz(self) -> None:
        st = self.state
        d_vz = self.config.d_vz
        if d_vz == 0:
            return
        L = order_stat_max(st.L_cz.table, d_vz - 1)
        U = order_stat_min(st.U_cz.table, d_vz - 1)
        st.L_zc = CondPmf(pmf_max2(L, st.L_fz.table), "L")
        st.U_zc = CondPmf(pmf_min2(U, st.U_fz.table), "U")

    # ---- item side -------------------------------------------------------------------

    def update_f_to_x(self) -> None:
        st = self.state
        q = self.q
        z = np.arange(q + 1)

        # a defective item is confirmed if its bundle is pinned to its true value and
        # all non-defective bundle mates are cleared, and dually
        st.pL_fx = float(
            (self.p_z_defective * st.L_zf.resolved() * st.pU0_xf ** (q - z)).sum()
        )
        st.pU0_fx = float((self.p_z_clean * st.U_zf.resolved() * st.pL_xf**z).sum())

    def update_x_to_cx(self) -> None:
        st = self.state
        d_vx = self.config.d_vx
        st.pL_xc = 1.0 - (1.0 - st.pL_cx) ** (d_vx - 1) * (1.0 - st.pL_fx)
        st.pU0_xc = 1.0 - (1.0 - st.pU0_cx) ** (d_vx - 1) * (1.0 - st.pU0_fx)

    def update_cx_to_x(self) -> None:
        st = self.state
        gamma = self.config.gamma
        d_c = self.config.d_c
        # a defective item is confirmed unless another item of the test is
        # non-defective and still uncleared, and dually
        st.pL_cx = (1.0 - (1.0 - gamma) * (1.0 - st.pU0_xc)) ** (d_c - 1)
        st.pU0_cx = (1.0 - gamma * (1.0 - st.pL_xc)) ** (d_c - 1)

    def update_x_to_f(self) -> None:
        st = self.state
        d_vx = self.config.d_vx
        st.pL_xf = 1.0 - (1.0 - st.pL_cx) ** d_vx
        st.pU0_xf = 1.0 - (1.0 - st.pU0_cx) ** d_vx

    # ---- iteration -------------------------------------------------------------------

    def step(self) -> float:
        """
        Runs one forward and one reverse sweep.

        :returns: Largest change of any tracked probability.
        """

        before = self.state.copy()

        self.update_cz_to_z()
        self.update_z_to_f()
        self.update_f_to_x()
        self.update_x_to_cx()

        self.update_cx_to_x()
        self.update_x_to_f()
        self.update_f_to_z()
        self.update_z_to_cz()

        self.state.iteration += 1

        return self.state.max_change(before)

    def residuals(self) -> tuple[float, float]:
        """
        Probabilities that a defective item is not confirmed and that a non-defective
        item is not cleared after combining all incoming messages. A class of items
        which does not occur has a residual of 0.
        """
        st = self.state
        d_vx = self.config.d_vx
        gamma = self.config.gamma

        r_L = (1.0 - st.pL_cx) ** d_vx * (1.0 - st.pL_fx)
        r_U = (1.0 - st.pU0_cx) ** d_vx * (1.0 - st.pU0_fx)

        return (0.0 if gamma == 0 else r_L), (0.0 if gamma == 1 else r_U)

    def violations(self) -> list[str]:
        """Lists invalid pmf rows and probabilities outside [0, 1]."""

        problems = [
            f"{name}: {msg}"
            for name, pmf in self.state.cond_pmfs()
            for msg in pmf.violations()
        ]

        for name, value in self.state.item_probs().items():
            if not -1e-12 <= value <= 1.0 + 1e-12:
                problems.append(f"{name}={value} is not a probability")

        return problems


# ==== grouped updates =================================================================


def de_test_bundle(de: DensityEvolution) -> tuple[CondPmf, CondPmf]:
    """Bundle-level test to bundle update. Returns the new lower and upper pmfs."""
    de.update_cz_to_z()
    return de.state.L_cz, de.state.U_cz


def de_bundle_side(de: DensityEvolution) -> None:
    """Bundle updates: messages to the bundle node, item sums and messages to tests."""
    de.update_z_to_f()
    de.update_f_to_z()
    de.update_z_to_cz()


def de_item_bundle(de: DensityEvolution) -> tuple[float, float]:
    """Bundle node to item and item to bundle node updates."""
    de.update_f_to_x()
    de.update_x_to_f()
    return de.state.pL_fx, de.state.pU0_fx


def de_test_item(de: DensityEvolution) -> tuple[float, float]:
    """Item to item-level test and item-level test to item updates."""
    de.update_x_to_cx()
    de.update_cx_to_x()
    return de.state.pL_cx, de.state.pU0_cx


# ==== driver ==========================================================================


@dataclass
class DeResult:
    """
    Outcome of a density evolution run.

    :param success: Whether both residuals dropped below ``delta_success``.
    :param iterations: Number of iterations run.
    :param residual_L: Final probability that a defective item stays unconfirmed.
    :param residual_U: Final probability that a non-defective item stays uncleared.
    :param tail_mass: Neglected mass of bundle-level test results.
    :param trajectory: States after every iteration, starting with the initial state,
        if requested.
    """

    config: DeConfig
    success: bool
    iterations: int
    residual_L: float
    residual_U: float
    tail_mass: float = 0.0
    trajectory: list[DeState] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "success": self.success,
            "iterations": self.iterations,
            "residual_L": self.residual_L,
            "residual_U": self.residual_U,
            "tail_mass": self.tail_mass,
        }


def de_iterate(
    config: DeConfig,
    trajectory: bool = False,
    max_iters: int | None = None,
    stop_on_success: bool = True,
) -> DeResult:
    """
    Runs density evolution until both residuals are below ``config.delta_success``,
    the recursion stops changing or the iteration cap is reached.

    :param config: Ensemble and numerical settings.
    :param trajectory: Whether to keep a copy of the state after every iteration.
    :param max_iters: Overrides ``config.max_de_iters``.
    :param stop_on_success: Whether to stop once both residuals are small. If
        ``False``, the recursion only stops at the iteration cap or when it settles.
    :returns: Run outcome.
    """

    cap = config.max_de_iters if max_iters is None else max_iters
    de = DensityEvolution(config)
    states = [de.state.copy()] if trajectory else []

    success = False
    r_L, r_U = de.residuals()

    for _ in range(cap):
        change = de.step()

        if trajectory:
            states.append(de.state.copy())

        r_L, r_U = de.residuals()

        if r_L < config.delta_success and r_U < config.delta_success:
            success = True
            if stop_on_success:
                break

        if change < STALL_TOLERANCE:
            logger.debug(
                "Stalled at iteration %s with residuals %.3g, %.3g",
                de.state.iteration,
                r_L,
                r_U,
            )
            break

    return DeResult(
        config=config,
        success=success,
        iterations=de.state.iteration,
        residual_L=r_L,
        residual_U=r_U,
        tail_mass=de.tail_mass,
        trajectory=states,
    )
