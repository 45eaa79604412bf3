"""
This module defines bundlegt's error classes. It should be kept free of memory heavy
imports.

All errors inherit from :exc:`BundleGtError` which has title and message attributes
to display the error to the user. Errors caused by invalid user input, such as
ensemble parameters which violate a divisibility constraint, inherit from
:exc:`ParameterError`. The CLI maps those to a usage error exit code while all other
errors are reported as runtime failures.
"""

from __future__ import annotations


class BundleGtError(Exception):
    """Base class for bundlegt errors

    :param title: A short description of the error type. This can be used in a CLI to
        give a short error summary.
    :param message: A more verbose description which can include instructions on how to
        proceed to fix the error.
    """

    def __init__(self, title: str, message: str = "") -> None:
        super().__init__(title, message)
        self.title = title
        self.message = message

    def __str__(self) -> str:
        return ". ".join([self.title, self.message]) if self.message else self.title


# ==== input errors ====================================================================


class ParameterError(BundleGtError):
    """Raised when ensemble or run parameters are out of range or inconsistent."""


class DivisibilityError(ParameterError):
    """Raised when the ensemble parameters violate one of the integrality constraints
    of the augmented graph, for instance when the bundle size does not divide the test
    degree. The message names the violated constraint.

    :param constraint: Short form of the violated constraint, e.g. ``"q | d_c"``.
    """

    def __init__(self, title: str, message: str = "", constraint: str = "") -> None:
        super().__init__(title, message)
        self.constraint = constraint


class ConfigError(ParameterError):
    """Raised when a run configuration file cannot be read or has an unsupported
    schema version."""


class DimensionError(ParameterError):
    """Raised when a population or syndrome vector has the wrong length for a graph."""


class GraphFormatError(ParameterError):
    """Raised when an exported graph cannot be parsed or is internally inconsistent."""


# ==== runtime errors ==================================================================


class ConstructionError(BundleGtError):
    """Raised when the random graph construction cannot remove all parallel edges
    within the configured number of swap attempts."""


class InconsistentSyndrome(BundleGtError):
    """Raised when a decoder update produces a lower bound above its upper bound. This
    cannot happen for a syndrome produced by the noiseless model and signals corrupted
    input or a bug.

    :param family: Message family in which the violation was detected.
    :param count: Number of violating edges.
    """

    def __init__(
        self, title: str, message: str = "", family: str = "", count: int = 0
    ) -> None:
        super().__init__(title, message)
        self.family = family
        self.count = count


class NoBracket(BundleGtError):
    """Raised when a threshold search cannot bracket the success / failure transition,
    for instance when density evolution still succeeds at the upper end of the
    search."""
