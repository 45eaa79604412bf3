"""
Defect model and noiseless quantitative tests.

Every item is defective independently with probability ``gamma``. A test returns the
number of defective items among its participants, so the syndrome is ``s = x A^T`` for
the flat test matrix ``A`` returned by :func:`bundlegt.graph.flatten_to_test_matrix`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DimensionError, ParameterError
from .graph import AugmentedGraph, flatten_to_test_matrix


__all__ = [
    "Population",
    "Syndrome",
    "trial_seed",
    "sample_population",
    "compute_syndrome",
    "bundle_values",
    "save_vector",
    "load_vector",
]


@dataclass(frozen=True)
class Population:
    x: np.ndarray
    gamma: float

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def defectives(self) -> int:
        return int(self.x.sum())


@dataclass(frozen=True)
class Syndrome:
    """Test results, bundle-level tests first followed by item-level tests."""

    s: np.ndarray
    m_z: int

    @property
    def s_z(self) -> np.ndarray:
        return self.s[: self.m_z]

    @property
    def s_x(self) -> np.ndarray:
        return self.s[self.m_z :]

    def __len__(self) -> int:
        return len(self.s)


def trial_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """
    Returns the seed sequence of a single trial. Trials can be reproduced in isolation
    and their streams do not depend on the order in which trials are executed.

    :param master_seed: Seed of record of the run.
    :param index: Trial index.
    """
    return np.random.SeedSequence([master_seed, index])


def sample_population(
    n: int, gamma: float, seed: int | np.random.SeedSequence | None = None
) -> Population:
    """
    Draws i.i.d. Bernoulli(gamma) defect indicators.

    :param n: Number of items.
    :param gamma: Defect probability as a fraction.
    :param seed: Seed for :func:`numpy.random.default_rng`.
    :raises ParameterError: if gamma is outside [0, 1].
    """

    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(
            "Invalid defect probability", f"gamma={gamma} is not in [0, 1]."
        )

    rng = np.random.default_rng(seed)
    x = (rng.random(n) < gamma).astype(np.int8)

    return Population(x=x, gamma=gamma)


def _as_items(graph: AugmentedGraph, x: np.ndarray | Sequence[int]) -> np.ndarray:

    x = np.asarray(x)

    if x.shape != (graph.params.n,):
        raise DimensionError(
            "Population has the wrong length",
            f"Expected {graph.params.n} items, got shape {x.shape}.",
        )

    return x.astype(np.int64)


def compute_syndrome(graph: AugmentedGraph, x: np.ndarray | Sequence[int]) -> Syndrome:
    """
    Computes the noiseless test results for a population.

    :param graph: Test graph.
    :param x: Defect indicators of length n.
    :raises DimensionError: if x has the wrong length.
    """
    x = _as_items(graph, x)
    rows = flatten_to_test_matrix(graph)
    return Syndrome(s=x[rows].sum(axis=1), m_z=graph.params.m_z)


def bundle_values(graph: AugmentedGraph, x: np.ndarray | Sequence[int]) -> np.ndarray:
    """Returns the number of defective items in every bundle."""
    x = _as_items(graph, x)
    return np.bincount(graph.bundle_of, weights=x, minlength=graph.params.n_h).astype(
        np.int64
    )


def save_vector(path: str, values: np.ndarray | Sequence[int]) -> None:
    """Writes an integer vector as a JSON array."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump([int(v) for v in values], f, separators=(",", ":"))
        f.write("\n")


def load_vector(path: str, length: int | None = None) -> np.ndarray:
    """
    Reads an integer vector from a JSON array.

    :param path: JSON file.
    :param length: Expected length, if known.
    :raises DimensionError: if the file does not hold a flat array of the expected
        length.
    """

    with open(path, encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise DimensionError("Vector file is not valid JSON", f"{path}: {exc}")

    if not isinstance(data, list) or not all(
        isinstance(v, int) and not isinstance(v, bool) for v in data
    ):
        raise DimensionError("Invalid vector file", f"{path} is not an integer array.")

    if length is not None and len(data) != length:
        raise DimensionError(
            "Vector has the wrong length",
            f"{path} holds {len(data)} entries, expected {length}.",
        )

    return np.array(data, dtype=np.int64)
