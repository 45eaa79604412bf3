"""
This module provides classes and methods for formatted output to stdout: prefixed
status messages and tables of numerical results.
"""

from __future__ import annotations

import enum
import math
from typing import Any, Iterator, Sequence

import click

from .utils import get_term_width


class Align(enum.Enum):
    """Text alignment in column"""

    Left = 0
    Right = 1


class Prefix(enum.Enum):
    """Prefix for command line output"""

    Info = 0
    Ok = 1
    Warn = 2
    NONE = 3


def adjust(text: str, width: int, align: Align = Align.Left) -> str:
    """
    Pads a string with spaces up the desired width. Preserves ANSI color codes without
    counting them towards the width.

    :param text: Initial string.
    :param width: Target width. If smaller than the given text, nothing is done.
    :param align: Side to align the padded string: to the left or to the right.
    """
    needed = width - len(click.unstyle(text))

    if needed <= 0:
        return text
    elif align is Align.Left:
        return text + " " * needed
    else:
        return " " * needed + text


def format_number(value: Any, precision: int = 4) -> str:
    """
    Formats a table cell. Floats are printed with ``precision`` significant digits,
    ``None`` and nan as a dash.
    """
    if value is None:
        return "-"
    if isinstance(value, float):
        if math.isnan(value):
            return "-"
        return f"{value:.{precision}g}"
    return str(value)


# ==== printing structured data to console =============================================


class Column:
    """
    A table column.

    :param title: Column title.
    :param align: Alignment of the cells. Numerical columns are right aligned.
    :param precision: Significant digits for float cells.
    """

    def __init__(
        self, title: str, align: Align = Align.Right, precision: int = 4
    ) -> None:
        self.title = title
        self.align = align
        self.precision = precision
        self.cells: list[str] = []

    @property
    def display_width(self) -> int:
        return max([len(self.title)] + [len(click.unstyle(c)) for c in self.cells])

    def append(self, value: Any) -> None:
        if isinstance(value, str):
            self.cells.append(value)
        else:
            self.cells.append(format_number(value, self.precision))

    def __len__(self) -> int:
        return len(self.cells)


class Table:
    """
    A table which can be printed to stdout.

    :param columns: Table columns. Can be a list of :class:`Column` instances or
        column titles.
    :param padding: Padding between columns.
    """

    columns: list[Column]

    def __init__(self, columns: Sequence[Column | str], padding: int = 2) -> None:
        self.columns = [c if isinstance(c, Column) else Column(c) for c in columns]
        self.padding = padding

    @property
    def ncols(self) -> int:
        return len(self.columns)

    def append(self, row: Sequence) -> None:
        """
        Appends a new row to the table.

        :param row: One value per column.
        """
        if len(row) != self.ncols:
            raise ValueError(f"Got {len(row)} fields but have {self.ncols} columns")

        for col, value in zip(self.columns, row):
            col.append(value)

    def __len__(self) -> int:
        return max((len(col) for col in self.columns), default=0)

    def format_lines(self, width: int | None = None) -> Iterator[str]:
        """
        Iterator over formatted lines of the table. Lines longer than ``width`` are cut.

        :param width: Width to fit the table. Defaults to terminal width if not given.
        """
        width = width or get_term_width()
        widths = [col.display_width for col in self.columns]
        spacer = " " * self.padding

        titles = [
            adjust(click.style(col.title, bold=True), w, col.align)
            for col, w in zip(self.columns, widths)
        ]
        yield spacer.join(titles).rstrip()

        for i in range(len(self)):
            cells = [
                adjust(col.cells[i], w, col.align)
                for col, w in zip(self.columns, widths)
            ]
            line = spacer.join(cells).rstrip()
            yield line if len(click.unstyle(line)) <= width else line[:width]

    def echo(self) -> None:
        """Prints the table to the terminal."""
        for line in self.format_lines():
            click.echo(line)


# ==== printing messages to console ====================================================


def echo(
    message: str, nl: bool = True, prefix: Prefix = Prefix.NONE, err: bool = False
) -> None:
    """
    Print a message to stdout.

    :param message: The string to output.
    :param nl: Whether to end with a new line.
    :param prefix: Any prefix to output before the message,
    :param err: Print to stderr instead.
    """
    if prefix is Prefix.Ok:
        pre = click.style("✓", fg="green") + " "
    elif prefix is Prefix.Warn:
        pre = click.style("!", fg="red") + " "
    elif prefix is Prefix.Info:
        pre = "- "
    else:
        pre = ""

    click.echo(f"{pre}{message}", nl=nl, err=err)


def info(message: str, nl: bool = True) -> None:
    """
    Print an info message to stdout. Will be prefixed with a dash.

    :param message: The string to output.
    :param nl: Whether to end with a new line.
    """
    echo(message, nl=nl, prefix=Prefix.Info)


def warn(message: str, nl: bool = True, err: bool = False) -> None:
    """
    Print a warning to stdout. Will be prefixed with an exclamation mark.

    :param message: The string to output.
    :param nl: Whether to end with a new line.
    :param err: Print to stderr instead.
    """
    echo(message, nl=nl, prefix=Prefix.Warn, err=err)


def ok(message: str, nl: bool = True) -> None:
    """
    Print a confirmation to stdout. Will be prefixed with a checkmark.

    :param message: The string to output.
    :param nl: Whether to end with a new line.
    """
    echo(message, nl=nl, prefix=Prefix.Ok)
