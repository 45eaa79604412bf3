from typing import cast

# external imports
import click

# local imports
from .core import OrderedGroup
from .cli_graph import gen_graph, validate_graph, sample, decode
from .cli_de import de_threshold, de_rate
from .cli_sim import simulate, crosscheck
from .cli_reproduce import reproduce_table1, reproduce_fig3

from .. import __version__


@click.group(
    cls=OrderedGroup,
    help="Quantitative group testing with bundle-augmented sparse graphs. Defect "
    "probabilities and rates are given in percent.",
)
@click.version_option(version=__version__, message="%(version)s")
def main():
    pass


main = cast(OrderedGroup, main)

main.add_command(gen_graph, section="Graphs")
main.add_command(validate_graph, section="Graphs")
main.add_command(sample, section="Graphs")
main.add_command(decode, section="Graphs")

main.add_command(de_threshold, section="Density Evolution")
main.add_command(de_rate, section="Density Evolution")

main.add_command(simulate, section="Simulation")
main.add_command(crosscheck, section="Simulation")

main.add_command(reproduce_table1, section="Reproduction")
main.add_command(reproduce_fig3, section="Reproduction")
