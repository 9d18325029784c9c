import logging
import sys

import click

from app.commands.solve_command import solve
from app.commands.sweep_command import sweep
from app.commands.verify_command import verify
from app.config.settings import get_settings
from app.shared.errors import DualLifeError

logger = logging.getLogger(__name__)


class DualLifeGroup(click.Group):
    """Maps domain errors to their exit codes; the detail goes to stderr."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except DualLifeError as e:
            logger.debug(f"{type(e).__name__}: {e.detail}")
            click.echo(f"Error: {e.detail}", err=True)
            ctx.exit(e.exit_code)


@click.group(cls=DualLifeGroup)
@click.option("--debug", is_flag=True, help="Enable DEBUG logging")
def cli(debug: bool) -> None:
    """Optimal retirement, consumption and portfolio solver."""
    settings = get_settings()
    # Configure logging: DEBUG level when DEBUG=true, INFO otherwise
    logging.basicConfig(
        level=logging.DEBUG if (debug or settings.DEBUG) else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )
    logger.debug(f"Starting {settings.PROJECT_NAME} (DEBUG={settings.DEBUG or debug})")


cli.add_command(solve)
cli.add_command(verify)
cli.add_command(sweep)


if __name__ == "__main__":
    cli()
