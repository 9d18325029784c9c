import click

from app.config.scenario_loader import load_scenario
from app.dependencies.service_dependencies import (
    get_export_service,
    get_scenario_service,
)


@click.command("solve")
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option(
    "-o",
    "--out-dir",
    default=".",
    show_default=True,
    type=click.Path(file_okay=False),
    help="Directory for summary.txt, solution.csv and policy_table.csv",
)
def solve(config_path: str, out_dir: str) -> None:
    """
    Solve the retirement problem for CONFIG_PATH.

    Writes the summary, the scalar solution and the policy table
    (y, X, c, pi, P, human_wealth, J) over [z_R/span, span z_R].
    """
    config = load_scenario(config_path)
    solved = get_scenario_service().solve(config)
    exporter = get_export_service()
    exporter.write_solution(solved, out_dir)
    click.echo(exporter.render_summary(solved.summary), nl=False)
