"""Command-line entry points for operating a network.

Exit codes: 0 success, 1 rejected input (bad definition file, failed
authentication, already-initialized directory, tampered chain), 2
runtime failure (missing files, broken persistence).
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import netconfig
from .identity import IssuanceError, Role
from .ledger import SnapshotMismatchError, verify_chain_file


def _fail(message: str, code: int):
    click.echo(message, err=True)
    sys.exit(code)


@click.group()
def main():
    """Permissioned health-record ledger tools."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--data-dir", "data_dir", required=True, type=click.Path(file_okay=False))
def bootstrap(config_path: str, data_dir: str):
    """Create a data directory from a network definition file."""
    if not os.path.exists(config_path):
        _fail(f"no definition file at {config_path}", 1)
    try:
        config = netconfig.load_config(config_path)
    except netconfig.ConfigError as exc:
        for error in exc.errors:
            click.echo(f"config error: {error}", err=True)
        sys.exit(1)
    try:
        summary = netconfig.bootstrap(config, data_dir)
    except netconfig.AlreadyInitializedError as exc:
        _fail(str(exc), 1)
    except (OSError, netconfig.BootstrapError) as exc:
        _fail(f"bootstrap failed: {exc}", 2)
    click.echo(json.dumps(summary, indent=2))


@main.command()
@click.option("--data-dir", "data_dir", required=True, type=click.Path(file_okay=False))
@click.option("--id", "subject_id", required=True)
@click.option("--role", "role_value", required=True, type=click.Choice(["admin", "doctor", "patient"]))
@click.option("--admin-password", required=True, help="Bootstrap admin password.")
def enroll(data_dir: str, subject_id: str, role_value: str, admin_password: str):
    """Issue a certificate and store the wallet for a client identity."""
    try:
        if not netconfig.check_admin_password(data_dir, admin_password):
            _fail("authentication failed", 1)
    except FileNotFoundError:
        _fail(f"{data_dir} is not a bootstrapped data directory", 2)
    try:
        certificate = netconfig.enroll_offline(data_dir, subject_id, Role(role_value))
    except IssuanceError as exc:
        _fail(f"enrollment rejected: {exc}", 1)
    except netconfig.ConfigError as exc:
        _fail(f"config error: {exc}", 1)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"enrollment failed: {exc}", 2)
    click.echo(
        json.dumps(
            {
                "subject_id": certificate.subject_id,
                "org": certificate.org,
                "role": certificate.role.value,
                "serial": certificate.serial,
                "not_after": certificate.not_after,
            },
            indent=2,
        )
    )


@main.command("seed-demo")
@click.option("--data-dir", "data_dir", required=True, type=click.Path(file_okay=False))
def seed_demo(data_dir: str):
    """Populate a bootstrapped network with demo doctors and patients."""
    try:
        handle = netconfig.open_network(data_dir)
    except FileNotFoundError as exc:
        _fail(f"{data_dir} is not a bootstrapped data directory: {exc}", 2)
    except (netconfig.ConfigError, SnapshotMismatchError) as exc:
        _fail(f"cannot open network: {exc}", 2)
    try:
        summary = netconfig.seed_demo(handle)
    except netconfig.BootstrapError as exc:
        _fail(f"seeding failed: {exc}", 2)
    finally:
        handle.close()
    click.echo(json.dumps(summary, indent=2))


@main.command()
@click.option("--data-dir", "data_dir", required=True, type=click.Path(file_okay=False))
@click.option("--bind", "bind", default=None, help="host:port, defaults to the definition file.")
def serve(data_dir: str, bind: str):
    """Run the REST gateway over a bootstrapped network."""
    import uvicorn

    from .gateway import create_app

    try:
        handle = netconfig.open_network(data_dir)
    except FileNotFoundError as exc:
        _fail(f"{data_dir} is not a bootstrapped data directory: {exc}", 2)
    except (netconfig.ConfigError, SnapshotMismatchError) as exc:
        _fail(f"cannot open network: {exc}", 2)
    host = handle.config.gateway.host
    port = handle.config.gateway.port
    if bind:
        host, _, port_text = bind.rpartition(":")
        if not host or not port_text.isdigit():
            handle.close()
            _fail("--bind must look like host:port", 1)
        port = int(port_text)
    app = create_app(handle)
    click.echo(f"gateway listening on {host}:{port}")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        handle.close()


@main.command("verify-chain")
@click.option("--data-dir", "data_dir", required=True, type=click.Path(file_okay=False))
def verify_chain(data_dir: str):
    """Recompute every hash in the block log and report the first defect."""
    log_path = os.path.join(data_dir, netconfig.CHAIN_LOG)
    report = verify_chain_file(log_path)
    if report.ok:
        click.echo("chain ok")
        return
    if report.kind == "io-error":
        _fail(f"cannot read chain: {report.detail}", 2)
    _fail(str(report), 1)


if __name__ == "__main__":
    main()
