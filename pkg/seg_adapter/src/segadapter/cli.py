"""Command line for the segmentation export adapter.

Exit codes: 0 success, 1 configuration/input error.
"""

from __future__ import annotations

import logging
import sys

import click

from .adapter import (AdapterConfig, AdapterError, export_predictions,
                      load_mapping, validate_format)


@click.group()
def main():
    """Export segmentation predictions as SegMap/confidence text files."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")


@main.command()
@click.option("--model", "model_ref", required=True,
              help="Model reference, e.g. stub:3.")
@click.option("--input-dir", type=click.Path(exists=True), required=True)
@click.option("--output-dir", type=click.Path(), required=True)
@click.option("--mapping", "mapping_path", type=click.Path(exists=True),
              required=True,
              help="File of 'model_index attribute_id' pairs.")
def export(model_ref, input_dir, output_dir, mapping_path):
    """Predict every image in INPUT_DIR and write .segmap/.conf pairs."""
    cfg = AdapterConfig(model_ref, input_dir, output_dir,
                        load_mapping(mapping_path))
    count = export_predictions(cfg)
    click.echo(f"exported {count} prediction pairs to {output_dir}")


@main.command()
@click.argument("output_dir", type=click.Path(exists=True))
def validate(output_dir):
    """Check every exported file against the grid grammar."""
    violations = validate_format(output_dir)
    for v in violations:
        click.echo(str(v))
    click.echo(f"{len(violations)} violations")


def run():
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except (AdapterError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
