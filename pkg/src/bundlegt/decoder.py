"""
Integer bound propagation decoder for the bundle-augmented graph.

Every message is a pair of integers ``(L, U)`` bounding the value of the variable it
refers to: the number of defectives of a bundle on bundle-side edges (``0..q``) and the
defect indicator of an item on item-side edges (``0..1``). Messages are stored per
directed edge in numpy arrays and all nodes of a stage are updated at once. Extrinsic
sums use total-minus-self accumulators.

One iteration consists of a forward sweep

    bundle-level tests -> bundles -> bundle nodes -> items -> item-level tests

followed by the reverse sweep

    item-level tests -> items -> bundle nodes -> bundles -> bundle-level tests.

Starting from the uninformative messages, lower bounds never decrease and upper bounds
never increase, so the decoder reaches a fixed point. An item is declared defective if
its final lower bound is 1. For a syndrome produced by the noiseless model, bounds
always contain the true values and no item is declared defective by mistake.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from .constants import DEFAULT_MAX_ITERS
from .exceptions import DimensionError, InconsistentSyndrome, ParameterError
from .graph import AugmentedGraph
from .model import Syndrome


__all__ = [
    "DecoderState",
    "DecodeOutcome",
    "Metrics",
    "Decoder",
    "init_state",
    "decode",
    "decode_flat",
    "classify",
]

logger = logging.getLogger(__name__)

_DTYPE = np.int32


# ==== helpers =========================================================================


def _extrinsic_max(a: np.ndarray, identity: int) -> np.ndarray:
    """For every entry of a row, the maximum over all other entries of that row."""

    d = a.shape[1]

    if d <= 1:
        return np.full_like(a, identity)

    idx = a.argmax(axis=1)[:, None]
    top = np.take_along_axis(a, idx, axis=1)

    rest = a.copy()
    np.put_along_axis(rest, idx, identity, axis=1)
    second = rest.max(axis=1, keepdims=True)

    out = np.repeat(top, d, axis=1)
    np.put_along_axis(out, idx, second, axis=1)
    return out


def _extrinsic_min(a: np.ndarray, identity: int) -> np.ndarray:
    return -_extrinsic_max(-a, -identity)


def _count(index: np.ndarray, values: np.ndarray, size: int) -> np.ndarray:
    return np.bincount(index, weights=values, minlength=size).astype(np.int64)


def _check(family: str, L: np.ndarray, U: np.ndarray, iteration: int) -> None:

    bad = int(np.count_nonzero(L > U))

    if bad:
        raise InconsistentSyndrome(
            "Inconsistent syndrome",
            f"{bad} {family} messages have a lower bound above the upper bound in "
            f"iteration {iteration}. The test results cannot stem from any population.",
            family=family,
            count=bad,
        )


# ==== state and results ===============================================================


@dataclass
class DecoderState:
    """
    Messages of all directed edge families. Arrays on test edges have the shape of the
    adjacency of the respective test class, e.g. ``L_cz[j, k]`` is the lower bound sent
    by bundle-level test ``j`` to its ``k``-th bundle.
    """

    L_cz: np.ndarray  # bundle-level test -> bundle
    U_cz: np.ndarray
    L_zc: np.ndarray  # bundle -> bundle-level test
    U_zc: np.ndarray
    L_zf: np.ndarray  # bundle -> bundle node, per bundle
    U_zf: np.ndarray
    L_fz: np.ndarray  # bundle node -> bundle, per bundle
    U_fz: np.ndarray
    L_fx: np.ndarray  # bundle node -> item, per item
    U_fx: np.ndarray
    L_xf: np.ndarray  # item -> bundle node, per item
    U_xf: np.ndarray
    L_cx: np.ndarray  # item-level test -> item
    U_cx: np.ndarray
    L_xc: np.ndarray  # item -> item-level test
    U_xc: np.ndarray
    iteration: int = 0

    FAMILIES = ("cz", "zc", "zf", "fz", "fx", "xf", "cx", "xc")

    def families(self) -> Iterator[tuple[str, np.ndarray, np.ndarray]]:
        for name in self.FAMILIES:
            yield name, getattr(self, f"L_{name}"), getattr(self, f"U_{name}")

    def copy(self) -> "DecoderState":
        return DecoderState(
            **{
                f.name: getattr(self, f.name).copy()
                if isinstance(getattr(self, f.name), np.ndarray)
                else getattr(self, f.name)
                for f in fields(self)
            }
        )

    def same_messages(self, other: "DecoderState") -> bool:
        return all(
            np.array_equal(L, oL) and np.array_equal(U, oU)
            for (_, L, U), (_, oL, oU) in zip(self.families(), other.families())
        )


def init_state(graph: AugmentedGraph) -> DecoderState:
    """
    Returns the initial decoder state: item-side messages are ``(0, 1)`` and bundle-side
    messages are ``(0, q)``.
    """

    p = graph.params

    def pair(shape: tuple[int, ...], cap: int) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(shape, dtype=_DTYPE), np.full(shape, cap, dtype=_DTYPE)

    L_cz, U_cz = pair((p.m_z, p.d_cz), p.q)
    L_zc, U_zc = pair((p.m_z, p.d_cz), p.q)
    L_zf, U_zf = pair((p.n_h,), p.q)
    L_fz, U_fz = pair((p.n_h,), p.q)
    L_fx, U_fx = pair((p.n,), 1)
    L_xf, U_xf = pair((p.n,), 1)
    L_cx, U_cx = pair((p.m_x, p.d_c), 1)
    L_xc, U_xc = pair((p.m_x, p.d_c), 1)

    return DecoderState(
        L_cz=L_cz,
        U_cz=U_cz,
        L_zc=L_zc,
        U_zc=U_zc,
        L_zf=L_zf,
        U_zf=U_zf,
        L_fz=L_fz,
        U_fz=U_fz,
        L_fx=L_fx,
        U_fx=U_fx,
        L_xf=L_xf,
        U_xf=U_xf,
        L_cx=L_cx,
        U_cx=U_cx,
        L_xc=L_xc,
        U_xc=U_xc,
    )


@dataclass
class DecodeOutcome:
    item_L: np.ndarray
    item_U: np.ndarray
    bundle_L: np.ndarray
    bundle_U: np.ndarray
    iterations: int
    converged: bool

    @property
    def declared(self) -> np.ndarray:
        """Items declared defective, i.e. items with a final lower bound of 1."""
        return np.flatnonzero(self.item_L == 1)

    @property
    def unresolved(self) -> np.ndarray:
        return np.flatnonzero(self.item_L < self.item_U)

    def to_dict(self) -> dict[str, Any]:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "declared": self.declared.tolist(),
            "unresolved": int(len(self.unresolved)),
            "item_L": self.item_L.tolist(),
            "item_U": self.item_U.tolist(),
            "bundle_L": self.bundle_L.tolist(),
            "bundle_U": self.bundle_U.tolist(),
        }


@dataclass
class Metrics:
    """
    Per-instance detection statistics. Rates relative to the truth are ``None`` if no
    ground truth was given. Rates with an empty denominator are reported as 0.
    """

    unresolved_fraction: float
    misdetection_rate: float | None = None
    false_alarm_rate: float | None = None
    defectives: int = 0
    misdetected: int = 0
    false_alarms: int = 0
    unresolved: int = 0


def classify(outcome: DecodeOutcome, truth: np.ndarray | None = None) -> Metrics:
    """
    Compares the declared set with the ground truth.

    :param outcome: Decoder result.
    :param truth: True defect indicators, optional.
    :returns: Misdetection rate (fraction of defective items which are not declared),
        false alarm rate (fraction of non-defective items which are declared) and the
        fraction of unresolved items.
    """

    n = len(outcome.item_L)
    unresolved = int(np.count_nonzero(outcome.item_L < outcome.item_U))
    metrics = Metrics(unresolved_fraction=unresolved / n if n else 0.0)
    metrics.unresolved = unresolved

    if truth is None:
        return metrics

    truth = np.asarray(truth).astype(bool)

    if truth.shape != (n,):
        raise DimensionError(
            "Ground truth has the wrong length",
            f"Expected {n} items, got {truth.shape}.",
        )

    declared = outcome.item_L == 1
    defectives = int(truth.sum())
    negatives = n - defectives

    metrics.defectives = defectives
    metrics.misdetected = int(np.count_nonzero(truth & ~declared))
    metrics.false_alarms = int(np.count_nonzero(~truth & declared))
    metrics.misdetection_rate = metrics.misdetected / defectives if defectives else 0.0
    metrics.false_alarm_rate = metrics.false_alarms / negatives if negatives else 0.0

    return metrics


# ==== decoder =========================================================================


class Decoder:
    """
    Stateful bound propagation decoder. Call :meth:`step` to run one iteration.

    :param graph: Test graph.
    :param syndrome: Test results in the row order of
        :func:`bundlegt.graph.flatten_to_test_matrix`.
    :raises DimensionError: if the syndrome has the wrong length.
    """

    def __init__(
        self, graph: AugmentedGraph, syndrome: Syndrome | np.ndarray | Sequence[int]
    ) -> None:

        p = graph.params
        s = syndrome.s if isinstance(syndrome, Syndrome) else np.asarray(syndrome)

        if s.shape != (p.m,):
            raise DimensionError(
                "Syndrome has the wrong length",
                f"Expected {p.m} test results, got shape {s.shape}.",
            )

        self.graph = graph
        self.q = p.q
        self.s_z = s[: p.m_z].astype(np.int64)[:, None]
        self.s_x = s[p.m_z :].astype(np.int64)[:, None]
        self.state = init_state(graph)

        self._bundle_items = graph.bundle_items
        self._bundle_edges = graph.bundle_edges
        self._bundle_of = graph.bundle_of
        self._cx_items = graph.cn_x.ravel()

    # ---- forward sweep ---------------------------------------------------------------

    def update_cz_to_z(self) -> None:
        st = self.state
        sum_U = st.U_zc.sum(axis=1, keepdims=True)
        sum_L = st.L_zc.sum(axis=1, keepdims=True)
        st.L_cz = np.maximum(self.s_z - (sum_U - st.U_zc), 0).astype(_DTYPE)
        st.U_cz = np.minimum(self.s_z - (sum_L - st.L_zc), self.q).astype(_DTYPE)
        _check("test-to-bundle", st.L_cz, st.U_cz, st.iteration + 1)

    def update_z_to_f(self) -> None:
        st = self.state
        L = st.L_cz.ravel()[self._bundle_edges]
        U = st.U_cz.ravel()[self._bundle_edges]
        st.L_zf = L.max(axis=1, initial=0).astype(_DTYPE)
        st.U_zf = U.min(axis=1, initial=self.q).astype(_DTYPE)
        _check("bundle-to-node", st.L_zf, st.U_zf, st.iteration + 1)

    def update_f_to_x(self) -> None:
        st = self.state
        b = self._bundle_of
        sum_U = st.U_xf[self._bundle_items].sum(axis=1)
        sum_L = st.L_xf[self._bundle_items].sum(axis=1)
        st.L_fx = np.maximum(st.L_zf[b] - (sum_U[b] - st.U_xf), 0).astype(_DTYPE)
        st.U_fx = np.minimum(st.U_zf[b] - (sum_L[b] - st.L_xf), 1).astype(_DTYPE)
        _check("node-to-item", st.L_fx, st.U_fx, st.iteration + 1)

    def update_x_to_cx(self) -> None:
        st = self.state
        items = self._cx_items
        n = self.graph.params.n

        L_in = st.L_cx.ravel()
        Z_in = 1 - st.U_cx.ravel()  # 1 where an upper bound of 0 was received

        ones = _count(items, L_in, n)
        zeros = _count(items, Z_in, n)

        L = np.maximum((ones[items] - L_in) > 0, st.L_fx[items])
        U = np.minimum((zeros[items] - Z_in) == 0, st.U_fx[items])

        st.L_xc = L.astype(_DTYPE).reshape(st.L_xc.shape)
        st.U_xc = U.astype(_DTYPE).reshape(st.U_xc.shape)
        _check("item-to-test", st.L_xc, st.U_xc, st.iteration + 1)

    # ---- reverse sweep ---------------------------------------------------------------

    def update_cx_to_x(self) -> None:
        st = self.state
        sum_U = st.U_xc.sum(axis=1, keepdims=True)
        sum_L = st.L_xc.sum(axis=1, keepdims=True)
        st.L_cx = np.maximum(self.s_x - (sum_U - st.U_xc), 0).astype(_DTYPE)
        st.U_cx = np.minimum(self.s_x - (sum_L - st.L_xc), 1).astype(_DTYPE)
        _check("test-to-item", st.L_cx, st.U_cx, st.iteration + 1)

    def update_x_to_f(self) -> None:
        st = self.state
        items = self._cx_items
        n = self.graph.params.n
        ones = _count(items, st.L_cx.ravel(), n)
        zeros = _count(items, 1 - st.U_cx.ravel(), n)
        st.L_xf = (ones > 0).astype(_DTYPE)
        st.U_xf = (zeros == 0).astype(_DTYPE)
        _check("item-to-node", st.L_xf, st.U_xf, st.iteration + 1)

    def update_f_to_z(self) -> None:
        st = self.state
        st.L_fz = st.L_xf[self._bundle_items].sum(axis=1).astype(_DTYPE)
        st.U_fz = st.U_xf[self._bundle_items].sum(axis=1).astype(_DTYPE)

    def update_z_to_cz(self) -> None:
        st = self.state
        edges = self._bundle_edges

        L = _extrinsic_max(st.L_cz.ravel()[edges], 0)
        U = _extrinsic_min(st.U_cz.ravel()[edges], self.q)
        L = np.maximum(L, st.L_fz[:, None])
        U = np.minimum(U, st.U_fz[:, None])

        L_zc = np.empty(st.L_zc.size, dtype=_DTYPE)
        U_zc = np.empty(st.U_zc.size, dtype=_DTYPE)
        L_zc[edges.ravel()] = L.ravel()
        U_zc[edges.ravel()] = U.ravel()

        st.L_zc = L_zc.reshape(st.L_zc.shape)
        st.U_zc = U_zc.reshape(st.U_zc.shape)
        _check("bundle-to-test", st.L_zc, st.U_zc, st.iteration + 1)

    # ---- iteration -------------------------------------------------------------------

    def step(self) -> bool:
        """
        Runs one forward and one reverse sweep.

        :returns: Whether any message changed.
        :raises InconsistentSyndrome: if any update yields a lower bound above the
            corresponding upper bound.
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

        return not self.state.same_messages(before)

    def item_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Combines all messages arriving at every item."""
        st = self.state
        items = self._cx_items
        n = self.graph.params.n
        ones = _count(items, st.L_cx.ravel(), n)
        zeros = _count(items, 1 - st.U_cx.ravel(), n)
        L = np.maximum(ones > 0, st.L_fx).astype(_DTYPE)
        U = np.minimum(zeros == 0, st.U_fx).astype(_DTYPE)
        return L, U

    def bundle_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Combines all messages arriving at every bundle."""
        st = self.state
        return np.maximum(st.L_zf, st.L_fz), np.minimum(st.U_zf, st.U_fz)


Observer = Callable[[Decoder], None]


def _run(
    step: Callable[[], bool],
    max_iters: int,
    on_step: Callable[[], None] | None = None,
) -> tuple[int, bool]:

    if max_iters < 1:
        raise ParameterError("Invalid iteration cap", "max_iters must be at least 1.")

    last_change = 0

    for it in range(1, max_iters + 1):
        changed = step()

        if on_step:
            on_step()

        if changed:
            last_change = it
        else:
            return last_change, True

    return last_change, False


def decode(
    graph: AugmentedGraph,
    syndrome: Syndrome | np.ndarray | Sequence[int],
    max_iters: int = DEFAULT_MAX_ITERS,
    observer: Observer | None = None,
) -> DecodeOutcome:
    """
    Runs the decoder until no message changes or ``max_iters`` iterations are done.

    :param graph: Test graph.
    :param syndrome: Test results.
    :param max_iters: Iteration cap.
    :param observer: Called with the decoder after every iteration.
    :returns: Final item and bundle bounds. ``iterations`` is the last iteration which
        changed any message, the confirming sweep is not counted.
    :raises InconsistentSyndrome: if the syndrome is inconsistent.
    """

    decoder = Decoder(graph, syndrome)

    iterations, converged = _run(
        decoder.step,
        max_iters,
        (lambda: observer(decoder)) if observer else None,
    )

    if not converged:
        logger.debug("No fixed point after %s iterations", max_iters)

    item_L, item_U = decoder.item_bounds()
    bundle_L, bundle_U = decoder.bundle_bounds()

    return DecodeOutcome(
        item_L=item_L,
        item_U=item_U,
        bundle_L=bundle_L,
        bundle_U=bundle_U,
        iterations=iterations,
        converged=converged,
    )


def decode_flat(
    rows: Sequence[Sequence[int]] | np.ndarray,
    n: int,
    syndrome: np.ndarray | Sequence[int],
    max_iters: int = DEFAULT_MAX_ITERS,
) -> DecodeOutcome:
    """
    Conventional bound propagation on a plain test matrix without bundles. Tests and
    items exchange messages in flooding fashion.

    :param rows: Items of every test. Rows may have different lengths.
    :param n: Number of items.
    :param syndrome: Result of every test.
    :param max_iters: Iteration cap.
    :returns: Decoding result without bundle bounds.
    """

    lengths = np.array([len(r) for r in rows], dtype=np.int64)
    m = len(lengths)
    s = np.asarray(syndrome, dtype=np.int64)

    if s.shape != (m,):
        raise DimensionError(
            "Syndrome has the wrong length", f"Expected {m} results, got {s.shape}."
        )

    items = (
        np.concatenate([np.asarray(r, dtype=np.int64) for r in rows])
        if m
        else np.zeros(0, dtype=np.int64)
    )
    tests = np.repeat(np.arange(m), lengths)
    s_e = s[tests]

    L_xc = np.zeros(len(items), dtype=np.int64)
    U_xc = np.ones(len(items), dtype=np.int64)
    L_cx = L_xc.copy()
    U_cx = U_xc.copy()
    iteration = 0

    def step() -> bool:
        nonlocal L_xc, U_xc, L_cx, U_cx, iteration
        iteration += 1

        sum_U = _count(tests, U_xc, m)[tests]
        sum_L = _count(tests, L_xc, m)[tests]
        new_L_cx = np.maximum(s_e - (sum_U - U_xc), 0)
        new_U_cx = np.minimum(s_e - (sum_L - L_xc), 1)
        _check("test-to-item", new_L_cx, new_U_cx, iteration)

        ones = _count(items, new_L_cx, n)[items]
        zeros = _count(items, 1 - new_U_cx, n)[items]
        new_L_xc = ((ones - new_L_cx) > 0).astype(np.int64)
        new_U_xc = ((zeros - (1 - new_U_cx)) == 0).astype(np.int64)
        _check("item-to-test", new_L_xc, new_U_xc, iteration)

        changed = not (
            np.array_equal(new_L_cx, L_cx)
            and np.array_equal(new_U_cx, U_cx)
            and np.array_equal(new_L_xc, L_xc)
            and np.array_equal(new_U_xc, U_xc)
        )

        L_cx, U_cx, L_xc, U_xc = new_L_cx, new_U_cx, new_L_xc, new_U_xc
        return changed

    iterations, converged = _run(step, max_iters)

    item_L = (_count(items, L_cx, n) > 0).astype(_DTYPE)
    item_U = (_count(items, 1 - U_cx, n) == 0).astype(_DTYPE)
    _check("item", item_L, item_U, iteration)

    empty = np.zeros(0, dtype=_DTYPE)

    return DecodeOutcome(
        item_L=item_L,
        item_U=item_U,
        bundle_L=empty,
        bundle_U=empty.copy(),
        iterations=iterations,
        converged=converged,
    )
