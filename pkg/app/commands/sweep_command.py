import click

from app.config.scenario_loader import load_scenario
from app.dependencies.service_dependencies import get_export_service, get_sweep_service
from app.services.sweep_service import SWEEP_PARAMETERS
from app.shared.errors import ConfigError
from app.shared.helpers.grid_helper import parse_float_list


@click.command("sweep")
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option(
    "--param", "parameter", required=True, type=click.Choice(SWEEP_PARAMETERS)
)
@click.option("--values", "raw_values", required=True, help="Comma list, e.g. 0.5,1,2")
@click.option(
    "-o",
    "--out-dir",
    default=".",
    show_default=True,
    type=click.Path(file_okay=False),
    help="Directory for sweep.csv",
)
def sweep(config_path: str, parameter: str, raw_values: str, out_dir: str) -> None:
    """Solve CONFIG_PATH once per value of one parameter and write sweep.csv."""
    try:
        values = parse_float_list(raw_values)
    except ValueError:
        raise ConfigError(
            f"--values: cannot parse {raw_values!r} as a comma list of numbers"
        )

    config = load_scenario(config_path)
    result = get_sweep_service().run(config, parameter, values)
    get_export_service().write_sweep(result, out_dir)

    failed = sum(row.status != "ok" for row in result.rows)
    click.echo(f"{parameter} sweep: {len(result.rows)} rows, {failed} failed")
    if result.z_R_decreasing is not None:
        click.echo(f"z_R decreasing: {str(result.z_R_decreasing).lower()}")
        click.echo(f"x_R increasing: {str(result.x_R_increasing).lower()}")
