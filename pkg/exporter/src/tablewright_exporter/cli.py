"""Export CLI: train a model on a CSV dataset and write model.json plus
held-out test vectors with the toolkit's predictions."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .export import FAMILIES, PRESETS, ExportError, ExportJob, export_model


@click.command()
@click.option("--dataset", required=True, type=click.Path(exists=True),
              help="CSV with feature columns and a 'label' column.")
@click.option("--family", required=True, type=click.Choice(FAMILIES))
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="S")
@click.option("--bits", type=int, default=8,
              help="Bit width every feature is quantized to.")
@click.option("--seed", type=int, default=0)
@click.option("--test-frac", type=float, default=0.25)
@click.option("--clusters", type=int, default=None,
              help="Cluster count for kmeans (defaults to the preset value).")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Where to write model.json.")
@click.option("--vectors", "vectors_path", default=None, type=click.Path(),
              help="Where to write test vectors (default: <out>.vectors.csv).")
def main(dataset, family, preset, bits, seed, test_frac, clusters, out_path,
         vectors_path):
    """Train a toy model and export it to the model spec JSON schema."""
    try:
        job = ExportJob(dataset=dataset, family=family, preset=preset,
                        bits=bits, seed=seed, test_frac=test_frac,
                        n_clusters=clusters)
        doc, header, rows = export_model(job)
    except ExportError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    vpath = Path(vectors_path) if vectors_path \
        else out.with_suffix(".vectors.csv")
    with open(vpath, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    # Quantized held-out rows in the compiler's dataset format (features plus
    # a trailing label column), ready for simulate/compare.
    dpath = out.with_suffix(".dataset.csv")
    n_feats = header.index("label")
    with open(dpath, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header[:n_feats] + ["label"])
        for row in rows:
            writer.writerow(row[:n_feats + 1])
    click.echo(f"wrote {out}, {vpath}, and {dpath} ({len(rows)} test vectors)")


if __name__ == "__main__":
    main()
