import hashlib

import pytest

from bundlegt.utils import chunks, effective_jobs, fraction_to_pct, pct_to_fraction
from bundlegt.utils.hashing import file_digest


def test_chunks():
    assert list(chunks(range(5), 2)) == [range(0, 2), range(2, 4), range(4, 5)]
    assert list(chunks([], 3)) == []


@pytest.mark.parametrize(("pct", "fraction"), [(0.646, 0.00646), (5.0, 0.05)])
def test_percent_conversion(pct, fraction):
    assert pct_to_fraction(pct) == pytest.approx(fraction)
    assert fraction_to_pct(fraction) == pytest.approx(pct)


def test_digests(tmp_path):
    path = tmp_path / "data.csv"
    path.write_bytes(b"gamma,misdetection_rate\n")
    empty = tmp_path / "empty.csv"
    empty.write_bytes(b"")

    expected = hashlib.sha256(b"gamma,misdetection_rate\n").hexdigest()

    assert file_digest(str(path)) == expected
    assert file_digest(str(empty)) == (
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    )
    assert file_digest(str(path), "md5") == hashlib.md5(path.read_bytes()).hexdigest()


def test_effective_jobs():
    assert effective_jobs(3) == 3
    assert effective_jobs(0) >= 1
    assert effective_jobs(-1) == effective_jobs(0)
