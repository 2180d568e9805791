"""Command-line entry points: serve the adapter, convert videos."""

from __future__ import annotations

import os
from pathlib import Path

import click
import uvicorn

from . import __version__
from .app import build_app
from .config import describe, load_config
from .convert import convert_video
from .errors import ConfigError, ConversionError


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Vendor adapter for the segmentation backend wire protocol."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8008, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Start the service from ADAPTER_* environment configuration."""
    try:
        config = load_config(os.environ)
        app = build_app(config)
    except ConfigError as e:
        click.echo(f"error: {e}", err=True)
        raise SystemExit(2)
    for line in describe(config):
        click.echo(line)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command("convert-video")
@click.argument("source", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("out_dir", type=click.Path(file_okay=False, path_type=Path))
def convert_video_cmd(source: Path, out_dir: Path) -> None:
    """Decode SOURCE into OUT_DIR/00000.png, 00001.png, ..."""
    try:
        count = convert_video(source, out_dir)
    except ConversionError as e:
        click.echo(f"error: {e}", err=True)
        raise SystemExit(3)
    click.echo(f"wrote {count} frames to {out_dir}")
