"""Utility modules and functions"""
from typing import Iterator, Sequence, TypeVar


# type definitions
_T = TypeVar("_T")


def chunks(lst: Sequence[_T], n: int) -> Iterator[Sequence[_T]]:
    """
    Partitions a sequence into chunks of length ``n``. The last chunk may be shorter.

    :param lst: Sequence to partition.
    :param n: Chunk size.
    :returns: Iterator over chunks.
    """
    for i in range(0, len(lst), n):
        yield lst[i : i + n]


def pct_to_fraction(value: float) -> float:
    """
    Converts a value given in percent, as used by the CLI and in CSV files, to a
    fraction as used by the Python API.

    :param value: Value in percent.
    :returns: Fraction in [0, 1] for inputs in [0, 100].
    """
    return value / 100.0


def fraction_to_pct(value: float) -> float:
    """
    Converts a fraction to percent.

    :param value: Fraction.
    :returns: Value in percent.
    """
    return value * 100.0


def effective_jobs(jobs: int) -> int:
    """
    Resolves a worker count. Values below 1 select all available cores.

    :param jobs: Requested number of parallel workers.
    :returns: Positive number of workers.
    """
    from joblib import cpu_count

    return cpu_count() if jobs < 1 else jobs
