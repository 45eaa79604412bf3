"""Module for content hashing of result files."""

from __future__ import annotations

# system imports
import hashlib


BLOCK_SIZE = 4 * 1024 * 1024


def file_digest(path: str, algorithm: str = "sha256") -> str:
    """
    Computes the hex digest of a file's content, reading it in blocks so that large
    result files never need to be held in memory.

    :param path: Path of the file to hash.
    :param algorithm: Any algorithm name accepted by :func:`hashlib.new`.
    :returns: Hexadecimal digest string.
    """
    hasher = hashlib.new(algorithm)

    with open(path, "rb") as f:
        while True:
            chunk = f.read(BLOCK_SIZE)
            if len(chunk) == 0:
                break
            hasher.update(chunk)

    return hasher.hexdigest()
