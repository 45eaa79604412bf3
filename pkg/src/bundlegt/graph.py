"""
This module constructs and validates the bundle-augmented test graph.

Items are grouped into bundles of ``q`` consecutive items. Each bundle is represented by
a hidden variable whose value is the number of defective items in the bundle. There are
two classes of tests:

* item-level tests (``cn_x``) which are wired to ``d_c`` individual items,
* bundle-level tests (``cn_z``) which are wired to ``d_cz = d_c / q`` bundles and
  therefore to all ``q`` items of each of those bundles.

The testing process itself is oblivious to the bundles: :func:`flatten_to_test_matrix`
returns the plain test assignment with ``d_c`` items per test and ``d_v`` tests per
item. All node ids are zero based.
"""

from __future__ import annotations

import json
import logging
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from scipy import io as sio
from scipy import sparse

from .constants import DEFAULT_REPAIR_FACTOR
from .exceptions import (
    ConstructionError,
    DivisibilityError,
    GraphFormatError,
    ParameterError,
)


__all__ = [
    "GtParams",
    "AugmentedGraph",
    "Finding",
    "ValidationReport",
    "derive_params",
    "build_graph",
    "fig1_graph",
    "flatten_to_test_matrix",
    "incidence_matrix",
    "validate_graph",
    "save_graph",
    "load_graph",
    "read_graph_document",
    "write_matrix_market",
]

logger = logging.getLogger(__name__)


# ==== parameters ======================================================================


@dataclass(frozen=True)
class GtParams:
    """Validated ensemble parameters. Use :func:`derive_params` to create instances."""

    n: int
    q: int
    d_v: int
    d_vx: int
    d_c: int
    d_vz: int
    d_cz: int
    m_x: int
    m_z: int
    n_h: int

    @property
    def m(self) -> int:
        """Total number of tests."""
        return self.m_x + self.m_z

    @property
    def omega(self) -> Fraction:
        """Rate m / n as an exact fraction."""
        return Fraction(self.m, self.n)

    def to_dict(self) -> dict[str, int]:
        """Returns the free parameters from which all others are derived."""
        return dict(n=self.n, q=self.q, d_v=self.d_v, d_vx=self.d_vx, d_c=self.d_c)


def _positive_int(name: str, value: Any) -> int:

    if isinstance(value, bool):
        raise ParameterError("Invalid parameter", f"{name} must be an integer.")

    try:
        value = operator.index(value)
    except TypeError:
        raise ParameterError(
            "Invalid parameter", f"{name} must be an integer, got {value!r}."
        )

    if value < 1:
        raise ParameterError(
            "Invalid parameter", f"{name} must be positive, got {value}."
        )

    return value


def derive_params(n: int, q: int, d_v: int, d_vx: int, d_c: int) -> GtParams:
    """
    Validates the free ensemble parameters and derives all dependent quantities.

    :param n: Number of items.
    :param q: Bundle size.
    :param d_v: Number of tests per item.
    :param d_vx: Number of item-level tests per item. The remaining ``d_v - d_vx``
        tests of an item are bundle-level tests.
    :param d_c: Number of items per test.
    :returns: Derived parameters.
    :raises ParameterError: for non-positive inputs or ``d_vx > d_v``.
    :raises DivisibilityError: if one of the integrality constraints is violated.
    """

    n = _positive_int("n", n)
    q = _positive_int("q", q)
    d_v = _positive_int("d_v", d_v)
    d_vx = _positive_int("d_vx", d_vx)
    d_c = _positive_int("d_c", d_c)

    if d_vx > d_v:
        raise ParameterError(
            "Invalid parameter", f"d_vx={d_vx} must not exceed d_v={d_v}."
        )

    if d_c % q:
        raise DivisibilityError(
            "Bundle size must divide the test degree",
            f"q={q} does not divide d_c={d_c}.",
            constraint="q | d_c",
        )

    if n % q:
        raise DivisibilityError(
            "Bundle size must divide the item count",
            f"q={q} does not divide n={n}.",
            constraint="q | n",
        )

    if (n * d_vx) % d_c:
        raise DivisibilityError(
            "Item-level edges do not fill whole tests",
            f"d_c={d_c} does not divide n*d_vx={n * d_vx}.",
            constraint="d_c | n*d_vx",
        )

    d_vz = d_v - d_vx
    d_cz = d_c // q
    n_h = n // q

    if (n_h * d_vz) % d_cz:
        raise DivisibilityError(
            "Bundle-level edges do not fill whole tests",
            f"d_cz={d_cz} does not divide n_h*d_vz={n_h * d_vz}.",
            constraint="d_cz | n_h*d_vz",
        )

    return GtParams(
        n=n,
        q=q,
        d_v=d_v,
        d_vx=d_vx,
        d_c=d_c,
        d_vz=d_vz,
        d_cz=d_cz,
        m_x=n * d_vx // d_c,
        m_z=n_h * d_vz // d_cz,
        n_h=n_h,
    )


# ==== graph ===========================================================================


@dataclass(frozen=True, eq=False)
class AugmentedGraph:
    """
    An immutable bundle-augmented test graph.

    :param params: Ensemble parameters.
    :param bundle_of: Bundle index of every item, shape ``(n,)``.
    :param cn_x: Items of every item-level test, shape ``(m_x, d_c)``.
    :param cn_z: Bundles of every bundle-level test, shape ``(m_z, d_cz)``.
    :param seed: Seed of record, if the graph was drawn from an integer seed.
    """

    params: GtParams
    bundle_of: np.ndarray
    cn_x: np.ndarray
    cn_z: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        for arr in (self.bundle_of, self.cn_x, self.cn_z):
            arr.flags.writeable = False

    @classmethod
    def from_adjacency(
        cls,
        params: GtParams,
        cn_x: Sequence[Sequence[int]] | np.ndarray,
        cn_z: Sequence[Sequence[int]] | np.ndarray,
        seed: int | None = None,
        bundle_of: Sequence[int] | np.ndarray | None = None,
    ) -> "AugmentedGraph":
        """
        Creates a graph from explicit adjacency lists and validates it.

        :param params: Ensemble parameters.
        :param cn_x: Item ids of each item-level test.
        :param cn_z: Bundle ids of each bundle-level test.
        :param seed: Seed of record.
        :param bundle_of: Bundle of each item. Defaults to consecutive blocks of q.
        :returns: Validated graph.
        :raises GraphFormatError: if the adjacency violates the graph invariants.
        """

        if bundle_of is None:
            bundle_of = np.arange(params.n) // params.q

        report = _validate_lists(params, bundle_of, cn_x, cn_z)

        if not report.ok:
            raise GraphFormatError("Invalid graph adjacency", str(report))

        return cls(
            params=params,
            bundle_of=np.array(bundle_of, dtype=np.int64),
            cn_x=np.array(cn_x, dtype=np.int64).reshape(params.m_x, params.d_c),
            cn_z=np.array(cn_z, dtype=np.int64).reshape(params.m_z, params.d_cz),
            seed=seed,
        )

    @cached_property
    def bundle_items(self) -> np.ndarray:
        """Items of every bundle, shape ``(n_h, q)``, in increasing order."""
        order = np.argsort(self.bundle_of, kind="stable")
        items = order.reshape(self.params.n_h, self.params.q)
        items.flags.writeable = False
        return items

    @cached_property
    def bundle_edges(self) -> np.ndarray:
        """
        For every bundle, the positions of its edges in ``cn_z.ravel()``, shape
        ``(n_h, d_vz)``.
        """
        order = np.argsort(self.cn_z.ravel(), kind="stable")
        edges = order.reshape(self.params.n_h, self.params.d_vz)
        edges.flags.writeable = False
        return edges

    def to_dict(self) -> dict[str, Any]:
        """Returns the JSON document form of the graph."""
        return {
            "params": self.params.to_dict(),
            "bundle_of": self.bundle_of.tolist(),
            "cn_x": self.cn_x.tolist(),
            "cn_z": self.cn_z.tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AugmentedGraph":
        """
        Creates a graph from its JSON document form.

        :raises GraphFormatError: if the document is malformed or invalid.
        """
        params, bundle_of, cn_x, cn_z = _unpack_document(data)
        return cls.from_adjacency(
            params, cn_x, cn_z, seed=data.get("seed"), bundle_of=bundle_of
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "AugmentedGraph":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphFormatError("Graph file is not valid JSON", str(exc))
        return cls.from_dict(data)

    def __repr__(self) -> str:
        p = self.params
        return (
            f"<{self.__class__.__name__}(n={p.n}, q={p.q}, d_v={p.d_v}, "
            f"d_vx={p.d_vx}, d_c={p.d_c}, seed={self.seed})>"
        )


def _seed_sequence(seed: int | np.random.SeedSequence | None) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _random_sockets(
    n_vars: int,
    var_deg: int,
    n_checks: int,
    check_deg: int,
    rng: np.random.Generator,
    key: np.ndarray | None,
    repair_factor: int,
    label: str,
) -> np.ndarray:
    """
    Configuration model: pairs variable sockets with check sockets uniformly at random
    and removes parallel edges by random socket swaps. If ``key`` is given, two
    variables with the same key count as parallel as well.
    """

    rows = rng.permutation(np.repeat(np.arange(n_vars), var_deg))
    rows = rows.reshape(n_checks, check_deg)

    if rows.size == 0:
        return rows

    keys = np.arange(n_vars) if key is None else key

    if check_deg > len(np.unique(keys)):
        raise ConstructionError(
            f"Cannot build {label} tests without parallel edges",
            f"A test needs {check_deg} distinct neighbours but only "
            f"{len(np.unique(keys))} exist.",
        )

    def has_conflict(row: np.ndarray) -> bool:
        k = np.sort(keys[row])
        return bool(np.any(k[1:] == k[:-1]))

    sorted_keys = np.sort(keys[rows], axis=1)
    bad = set(np.flatnonzero(np.any(sorted_keys[:, 1:] == sorted_keys[:, :-1], axis=1)))

    if not bad:
        return rows

    logger.debug("Repairing %s %s tests with parallel edges", len(bad), label)

    max_attempts = repair_factor * rows.size
    attempts = 0

    while bad:
        r = min(bad)
        row_keys = keys[rows[r]]
        _, first = np.unique(row_keys, return_index=True)
        dup_pos = np.setdiff1d(np.arange(check_deg), first)

        while len(dup_pos) > 0:

            if attempts >= max_attempts:
                raise ConstructionError(
                    f"Cannot build {label} tests without parallel edges",
                    f"Gave up after {attempts} swap attempts. Try another seed or "
                    "a larger repair factor.",
                )
            attempts += 1

            p = int(dup_pos[0])
            r2 = int(rng.integers(n_checks))
            p2 = int(rng.integers(check_deg))

            if r2 == r:
                continue

            a, b = rows[r, p], rows[r2, p2]
            rows[r, p], rows[r2, p2] = b, a

            r2_ok = not has_conflict(rows[r2])
            r_new_conflict = keys[b] in np.delete(keys[rows[r]], p)

            if r_new_conflict or (not r2_ok and r2 not in bad):
                # revert, the swap would move the problem elsewhere
                rows[r, p], rows[r2, p2] = a, b
                continue

            if r2_ok:
                bad.discard(r2)

            row_keys = keys[rows[r]]
            _, first = np.unique(row_keys, return_index=True)
            dup_pos = np.setdiff1d(np.arange(check_deg), first)

        bad.discard(r)

    logger.debug("Repair of %s tests took %s swap attempts", label, attempts)

    return rows


def build_graph(
    params: GtParams,
    seed: int | np.random.SeedSequence | None = None,
    distinct_bundles_per_test: bool = False,
    repair_factor: int = DEFAULT_REPAIR_FACTOR,
) -> AugmentedGraph:
    """
    Draws a graph from the regular bundle-augmented ensemble. Each edge class is drawn
    from an independent stream of the seed sequence with the configuration model.

    :param params: Ensemble parameters.
    :param seed: Integer seed or seed sequence. The result is a deterministic function
        of ``(params, seed)``.
    :param distinct_bundles_per_test: If ``True``, item-level tests never contain two
        items of the same bundle.
    :param repair_factor: Swap attempts per edge before giving up on parallel edges.
    :returns: Random graph.
    :raises ConstructionError: if parallel edges cannot be removed.
    """

    ss = _seed_sequence(seed)
    ss_x, ss_z = ss.spawn(2)

    bundle_of = np.arange(params.n, dtype=np.int64) // params.q

    cn_x = _random_sockets(
        params.n,
        params.d_vx,
        params.m_x,
        params.d_c,
        np.random.default_rng(ss_x),
        key=bundle_of if distinct_bundles_per_test else None,
        repair_factor=repair_factor,
        label="item-level",
    )

    cn_z = _random_sockets(
        params.n_h,
        params.d_vz,
        params.m_z,
        params.d_cz,
        np.random.default_rng(ss_z),
        key=None,
        repair_factor=repair_factor,
        label="bundle-level",
    )

    return AugmentedGraph(
        params=params,
        bundle_of=bundle_of,
        cn_x=np.sort(cn_x, axis=1).astype(np.int64),
        cn_z=np.sort(cn_z, axis=1).astype(np.int64),
        seed=seed if isinstance(seed, int) else None,
    )


def fig1_graph() -> AugmentedGraph:
    """
    Returns the small example graph with 8 items, 4 bundles of 2 items, 4 bundle-level
    tests and 2 item-level tests (d_c=4, d_v=3, d_vx=1).
    """
    params = derive_params(8, 2, 3, 1, 4)
    return AugmentedGraph.from_adjacency(
        params,
        cn_x=[[0, 2, 4, 6], [1, 3, 5, 7]],
        cn_z=[[0, 3], [1, 2], [0, 2], [1, 3]],
    )


# ==== flat test matrix ================================================================


def flatten_to_test_matrix(graph: AugmentedGraph) -> np.ndarray:
    """
    Returns the items of every test as seen by the bundle-oblivious testing process.
    Bundle-level tests come first, followed by item-level tests. Every row is sorted.

    :param graph: The augmented graph.
    :returns: Array of shape ``(m, d_c)`` with item ids.
    """
    p = graph.params
    z_rows = graph.bundle_items[graph.cn_z].reshape(p.m_z, p.d_c)
    rows = np.concatenate([z_rows, graph.cn_x], axis=0)
    return np.sort(rows, axis=1)


def incidence_matrix(graph: AugmentedGraph) -> sparse.csr_matrix:
    """
    Returns the m x n test matrix in row order of :func:`flatten_to_test_matrix`.
    """
    p = graph.params
    rows = flatten_to_test_matrix(graph)
    indptr = np.arange(0, p.m * p.d_c + 1, p.d_c)
    data = np.ones(rows.size, dtype=np.int8)
    return sparse.csr_matrix((data, rows.ravel(), indptr), shape=(p.m, p.n))


def write_matrix_market(graph: AugmentedGraph, path: str) -> None:
    """Writes the test matrix in Matrix Market coordinate pattern format."""
    sio.mmwrite(
        path,
        incidence_matrix(graph).tocoo(),
        comment=f"bundlegt test matrix, seed={graph.seed}",
        field="pattern",
    )


# ==== validation ======================================================================


@dataclass(frozen=True)
class Finding:
    """A single violated graph invariant."""

    kind: str
    node: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.node}: {self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return len(self.findings) == 0

    def add(self, kind: str, node: str, message: str) -> None:
        self.findings.append(Finding(kind, node, message))

    def kinds(self) -> set[str]:
        return {f.kind for f in self.findings}

    def __len__(self) -> int:
        return len(self.findings)

    def __str__(self) -> str:
        return "; ".join(str(f) for f in self.findings)


def _count_rows(
    report: ValidationReport,
    rows: Iterable[Sequence[int]],
    expected_len: int,
    n_nodes: int,
    prefix: str,
    node_prefix: str,
    key: np.ndarray | None = None,
    key_kind: str = "parallel",
) -> np.ndarray:
    """Checks test rows and returns how often each variable node occurs."""

    counts = np.zeros(n_nodes, dtype=np.int64)

    for j, row in enumerate(rows):
        ids = [int(v) for v in row]

        if len(ids) != expected_len:
            report.add(
                "degree",
                f"{prefix}{j}",
                f"has {len(ids)} neighbours, expected {expected_len}",
            )

        valid = [v for v in ids if 0 <= v < n_nodes]

        for v in ids:
            if not 0 <= v < n_nodes:
                report.add("range", f"{prefix}{j}", f"neighbour id {v} out of range")

        seen: set[int] = set()
        for v in valid:
            if v in seen:
                report.add(
                    "parallel", f"{prefix}{j}", f"repeated edge to {node_prefix}{v}"
                )
            seen.add(v)

        if key is not None:
            seen_keys: set[int] = set()
            for v in set(valid):
                k = int(key[v])
                if k in seen_keys:
                    report.add(
                        key_kind,
                        f"{prefix}{j}",
                        f"two items of bundle z{k} in one test",
                    )
                seen_keys.add(k)

        np.add.at(counts, np.array(valid, dtype=np.int64), 1)

    return counts


def _validate_lists(
    params: GtParams,
    bundle_of: Sequence[int] | np.ndarray,
    cn_x: Sequence[Sequence[int]] | np.ndarray,
    cn_z: Sequence[Sequence[int]] | np.ndarray,
    distinct_bundles_per_test: bool = False,
) -> ValidationReport:

    report = ValidationReport()
    p = params

    bundle_of = np.asarray(bundle_of, dtype=np.int64)

    if bundle_of.shape != (p.n,):
        report.add(
            "bundle", "bundle_of", f"has {bundle_of.size} entries, expected {p.n}"
        )
        return report

    if np.any((bundle_of < 0) | (bundle_of >= p.n_h)):
        report.add("range", "bundle_of", "bundle id out of range")
        return report

    sizes = np.bincount(bundle_of, minlength=p.n_h)
    for f in np.flatnonzero(sizes != p.q):
        report.add("bundle", f"z{f}", f"contains {sizes[f]} items, expected {p.q}")

    if len(cn_x) != p.m_x:
        report.add("count", "cn_x", f"has {len(cn_x)} tests, expected {p.m_x}")

    if len(cn_z) != p.m_z:
        report.add("count", "cn_z", f"has {len(cn_z)} tests, expected {p.m_z}")

    item_deg = _count_rows(
        report,
        cn_x,
        p.d_c,
        p.n,
        "c_x",
        "x",
        key=bundle_of if distinct_bundles_per_test else None,
        key_kind="collision",
    )
    bundle_deg = _count_rows(report, cn_z, p.d_cz, p.n_h, "c_z", "z")

    for i in np.flatnonzero(item_deg != p.d_vx):
        report.add(
            "degree",
            f"x{i}",
            f"has {item_deg[i]} item-level tests, expected {p.d_vx}",
        )

    for f in np.flatnonzero(bundle_deg != p.d_vz):
        report.add(
            "degree",
            f"z{f}",
            f"has {bundle_deg[f]} bundle-level tests, expected {p.d_vz}",
        )

    return report


def _unpack_document(data: Mapping[str, Any]) -> tuple[GtParams, Any, Any, Any]:

    try:
        raw_params = data["params"]
        params = derive_params(
            raw_params["n"],
            raw_params["q"],
            raw_params["d_v"],
            raw_params["d_vx"],
            raw_params["d_c"],
        )
        bundle_of = data.get("bundle_of")
        cn_x = data["cn_x"]
        cn_z = data["cn_z"]
    except (KeyError, TypeError) as exc:
        raise GraphFormatError("Malformed graph document", f"Missing field {exc}.")

    if bundle_of is None:
        bundle_of = np.arange(params.n) // params.q

    return params, bundle_of, cn_x, cn_z


def validate_graph(
    graph: AugmentedGraph | Mapping[str, Any],
    distinct_bundles_per_test: bool = False,
) -> ValidationReport:
    """
    Audits degrees, parallel edges and bundle sizes of a graph. The graph can also be
    given in its JSON document form, which allows auditing damaged files.

    :param graph: Graph or JSON document.
    :param distinct_bundles_per_test: Also report item-level tests which contain more
        than one item of a bundle.
    :returns: Report which is empty if and only if all invariants hold.
    """

    if isinstance(graph, AugmentedGraph):
        return _validate_lists(
            graph.params,
            graph.bundle_of,
            graph.cn_x,
            graph.cn_z,
            distinct_bundles_per_test,
        )

    params, bundle_of, cn_x, cn_z = _unpack_document(graph)
    return _validate_lists(params, bundle_of, cn_x, cn_z, distinct_bundles_per_test)


# ==== file io =========================================================================


def read_graph_document(path: str) -> dict[str, Any]:
    """Reads a graph JSON file without validating it."""
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise GraphFormatError("Graph file is not valid JSON", f"{path}: {exc}")


def save_graph(graph: AugmentedGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(graph.to_json())
        f.write("\n")


def load_graph(path: str) -> AugmentedGraph:
    """
    Loads and validates a graph JSON file.

    :raises GraphFormatError: if the file is malformed or invalid.
    """
    return AugmentedGraph.from_dict(read_graph_document(path))
