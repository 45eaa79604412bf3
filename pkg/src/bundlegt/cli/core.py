"""
This module provides custom click command line parameters for defect probabilities and
rates given in percent, as well as an ordered command group class which prints its
help output in sections and maps usage errors to bundlegt's exit codes.
"""
from __future__ import annotations

import sys
from typing import Any, Sequence

import click

from ..constants import EXIT_USAGE


# ==== Custom parameter types ==========================================================

# A custom parameter:
# * needs a name
# * needs to pass through None unchanged
# * needs to convert from a string
# * needs to convert its result type through unchanged (eg: needs to be idempotent)
# * needs to be able to deal with param and context being None. This can be the case
#   when the object is used with prompt inputs.


class Percent(click.ParamType):
    """A command line parameter representing a probability or rate in percent

    Accepts plain numbers and numbers with a trailing percent sign, e.g. ``0.646`` or
    ``0.646%``. The converted value stays in percent.

    :param allow_zero: Whether 0% is accepted.
    """

    name = "percent"

    def __init__(self, allow_zero: bool = False) -> None:
        self.allow_zero = allow_zero

    def convert(
        self,
        value: Any,
        param: click.Parameter | None,
        ctx: click.Context | None,
    ) -> float | None:

        if value is None or isinstance(value, float):
            return value

        text = str(value).strip().rstrip("%")

        try:
            pct = float(text)
        except ValueError:
            self.fail(f"'{value}' is not a number", param, ctx)

        lower_ok = pct >= 0 if self.allow_zero else pct > 0

        if not lower_ok or pct >= 100:
            self.fail(f"{pct}% is outside the valid range", param, ctx)

        return pct


class PercentList(click.ParamType):
    """A comma separated list of values in percent, e.g. ``0.70,0.745,0.77``."""

    name = "percent list"

    def convert(
        self,
        value: Any,
        param: click.Parameter | None,
        ctx: click.Context | None,
    ) -> list[float] | None:

        if value is None or isinstance(value, list):
            return value

        item = Percent()
        parts = [p for p in str(value).split(",") if p.strip()]
        return [item.convert(p, param, ctx) for p in parts]


class IntList(click.ParamType):
    """A comma separated list of positive integers, e.g. ``1,4,5``."""

    name = "integer list"

    def convert(
        self,
        value: Any,
        param: click.Parameter | None,
        ctx: click.Context | None,
    ) -> list[int] | None:

        if value is None or isinstance(value, list):
            return value

        try:
            values = [int(p) for p in str(value).split(",") if p.strip()]
        except ValueError:
            self.fail(f"'{value}' is not a list of integers", param, ctx)

        if any(v < 1 for v in values):
            self.fail("Values must be positive", param, ctx)

        return values


# ==== custom command group with ordered output ========================================


class OrderedGroup(click.Group):
    """
    Click command group with customizable sections of help output. Usage errors exit
    with :data:`bundlegt.constants.EXIT_USAGE`.
    """

    def __init__(self, *args: Any, **kwargs: Any) -> None:
        super().__init__(*args, **kwargs)
        self.sections: dict[str, list[tuple[str, click.Command]]] = {}

    def add_command(
        self, cmd: click.Command, name: str | None = None, section: str = ""
    ) -> None:
        name = name or cmd.name

        if name is None:
            raise TypeError("Command has no name.")

        self.sections[section] = self.sections.get(section, []) + [(name, cmd)]
        super().add_command(cmd, name)

    def format_commands(
        self, ctx: click.Context, formatter: click.HelpFormatter
    ) -> None:

        commands = [
            name
            for name in self.commands
            if (cmd := self.get_command(ctx, name)) is not None and not cmd.hidden
        ]

        if not commands:
            return

        max_len = max(len(name) for name in commands)
        limit = formatter.width - 6 - max_len

        for section, cmd_list in self.sections.items():

            rows = [
                (name.ljust(max_len), cmd.get_short_help_str(limit))
                for name, cmd in cmd_list
                if not cmd.hidden
            ]

            if rows:
                with formatter.section(section):
                    formatter.write_dl(rows)

    def main(  # type: ignore[override]
        self,
        args: Sequence[str] | None = None,
        prog_name: str | None = None,
        complete_var: str | None = None,
        standalone_mode: bool = True,
        **extra: Any,
    ) -> Any:

        try:
            rv = super().main(
                args, prog_name, complete_var, standalone_mode=False, **extra
            )
        except click.exceptions.Abort:
            if not standalone_mode:
                raise
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        except click.ClickException as exc:
            if not standalone_mode:
                raise
            exc.show()
            sys.exit(EXIT_USAGE)

        if standalone_mode:
            sys.exit(rv if isinstance(rv, int) else 0)

        return rv
