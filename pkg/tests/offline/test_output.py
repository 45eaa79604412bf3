import math

import click
import pytest

from bundlegt.cli.core import IntList, Percent, PercentList
from bundlegt.cli.output import Align, Column, Table, adjust, format_number


def test_format_number():
    assert format_number(0.0123456) == "0.01235"
    assert format_number(12) == "12"
    assert format_number(None) == "-"
    assert format_number(math.nan) == "-"


def test_adjust():
    assert adjust("ab", 4) == "ab  "
    assert adjust("ab", 4, Align.Right) == "  ab"
    assert adjust(click.style("ab", bold=True), 3) == click.style("ab", bold=True) + " "


def test_table():
    table = Table([Column("message", Align.Left), "z"])
    table.append(["pL_cx", 1.5])
    table.append(["U_cz", -0.25])

    lines = [click.unstyle(line) for line in table.format_lines(width=80)]

    assert lines == ["message      z", "pL_cx      1.5", "U_cz     -0.25"]

    with pytest.raises(ValueError):
        table.append(["too few"])


def test_table_cuts_long_lines():
    table = Table(["a"])
    table.append(["x" * 30])

    assert len(list(table.format_lines(width=10))[1]) == 10


@pytest.mark.parametrize(("text", "value"), [("0.646", 0.646), ("5%", 5.0)])
def test_percent(text, value):
    assert Percent().convert(text, None, None) == value


@pytest.mark.parametrize("text", ["0", "100", "-1", "abc"])
def test_percent_invalid(text):
    with pytest.raises(click.BadParameter):
        Percent().convert(text, None, None)


def test_percent_allow_zero():
    assert Percent(allow_zero=True).convert("0", None, None) == 0.0


def test_lists():
    assert PercentList().convert("0.70,0.745, 0.77", None, None) == [0.7, 0.745, 0.77]
    assert IntList().convert("1,4,5", None, None) == [1, 4, 5]

    with pytest.raises(click.BadParameter):
        IntList().convert("1,0", None, None)
