from typing import Optional

import click

from app.config.scenario_loader import load_scenario
from app.dependencies.service_dependencies import (
    get_export_service,
    get_verification_service,
)
from app.shared.errors import VerificationFailedError


@click.command("verify")
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option(
    "--oracle",
    type=click.Choice(["crra"]),
    default=None,
    help="Compare against the CRRA closed forms",
)
@click.option("--simulate", is_flag=True, help="Run the Monte Carlo checks")
@click.option(
    "-o",
    "--out-dir",
    default=".",
    show_default=True,
    type=click.Path(file_okay=False),
    help="Directory for verification.csv",
)
def verify(
    config_path: str, oracle: Optional[str], simulate: bool, out_dir: str
) -> None:
    """Verify the solution for CONFIG_PATH; exits 0 only when every check passes."""
    config = load_scenario(config_path)
    report = get_verification_service().verify(config, oracle=oracle, simulate=simulate)
    exporter = get_export_service()
    exporter.write_verification(report, out_dir)
    click.echo(exporter.render_verification_table(report), nl=False)
    if not report.passed:
        failed = [c.name for c in report.checks if c.status.value != "pass"]
        raise VerificationFailedError(f"Checks not passed: {', '.join(failed)}")
