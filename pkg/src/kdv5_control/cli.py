#!/usr/bin/env python3
"""CLI interface for kdv5-control."""

import functools
import json
import logging
import os
import sys

import click

from . import __version__
from .errors import ConfigError, Kdv5Error

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else os.environ.get("KDV5_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def _report(error: Kdv5Error) -> None:
    if isinstance(error, ConfigError):
        for message in error.messages:
            click.echo(message, err=True)
    click.echo(json.dumps(error.to_dict(), sort_keys=True, default=str), err=True)


def scenario_command(func):
    """Shared options of the scenario commands."""

    @click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False), help="Scenario JSON file")
    @click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False), help="Output directory")
    @click.option("--threads", default=None, type=click.IntRange(min=1), help="Worker threads (overrides run.threads)")
    @click.option("--verbose", is_flag=True, help="Log at DEBUG level")
    @functools.wraps(func)
    def wrapper(config_path, out_dir, threads, verbose):
        configure_logging(verbose)
        sys.exit(run_scenario(config_path, out_dir, threads, func.__name__))

    return wrapper


def run_scenario(config_path, out_dir=None, threads=None, command=None) -> int:
    """Load, run and report one scenario; returns the exit code (0, 2 or 3)."""
    from .handlers.scenario_handler import ScenarioHandler
    from .loaders.scenario_loader import load_scenario

    try:
        scenario = load_scenario(config_path)
        handler = ScenarioHandler(scenario, out_dir, threads)
        exit_code = handler.run(None if command == "run" else command)
    except Kdv5Error as e:
        _report(e)
        return e.exit_code
    click.echo(f"{command if command != 'run' else scenario.command}: exit {exit_code}, outputs in {handler.out_dir}")
    return exit_code


@click.group()
def cli():
    """kdv5-control - simulation and control of fifth-order KdV equations on the torus."""
    pass


@cli.command()
def version():
    """Show the version of kdv5-control."""
    click.echo(f"kdv5-control version {__version__}")


@cli.command()
def schema():
    """Print the JSON schema of scenario configs."""
    from .loaders.scenario_loader import config_schema

    click.echo(json.dumps(config_schema(), indent=2, sort_keys=True))


@cli.command()
@scenario_command
def simulate():
    """Open-loop (or configured-feedback) nonlinear simulation."""


@cli.command()
@scenario_command
def stabilize():
    """Feedback-stabilized run with decay fit and energy ledger."""


@cli.command()
@scenario_command
def control():
    """Steer initial_data to target_data with a minimum-energy control."""


@cli.command()
@scenario_command
def observability():
    """Observability Gramian report."""


@cli.command()
@scenario_command
def verify():
    """Run the invariant suite at the configured scale."""


@cli.command()
@scenario_command
def run():
    """Run the command named by run.command in the config."""


def main():
    """Main entry point."""
    cli()


if __name__ == "__main__":
    main()
