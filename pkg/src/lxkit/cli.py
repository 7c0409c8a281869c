"""Command-line entry points.

  lx analyze        classify a CSV of texts into perception columns
  lx cost-estimate  pre-flight token/cost estimate for a remote backend
  lx mediate        fit the rating/purchase mediation system on product data
  lx train-toy      run the desk-scale fine-tuning demo
  lx eval           score prediction CSVs against truth CSVs
  lx synth-products write a synthetic product-record CSV
  lx serve          run the batch HTTP service
"""
from __future__ import annotations

import json
from pathlib import Path

import click

from . import finetune, metrics
from .inference import BackendConfig, estimate_cost, estimate_tokens, format_usd
from .instructions import NEGATIVE, NEUTRAL, NOT_PRESENT, POSITIVE, PRESENT
from .mediation import mediation_report, read_product_csv, write_product_csv
from .service.engine import (
    AnalysisConfig,
    analyze_rows,
    ingest_csv,
    selectable_perceptions,
)
from .synthdata import SynthConfig, generate_products


@click.group()
def main() -> None:
    """Consumer-perception text analytics toolkit."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--id-col", required=True)
@click.option("--text-col", required=True)
@click.option("--perceptions", default="all", show_default=True,
              help="comma-separated perception ids, or 'all'")
@click.option("--backend", "backend_path", type=click.Path(exists=True, path_type=Path),
              help="backend config JSON; defaults to the offline lexicon")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--include-text", is_flag=True, help="copy the text column into the output")
@click.option("--aspect-columns", is_flag=True, help="emit per-aspect sentiment columns")
@click.option("--max-bytes", default=1024 * 1024, show_default=True)
def analyze(input_path: Path, id_col: str, text_col: str, perceptions: str,
            backend_path: Path | None, out_path: Path, include_text: bool,
            aspect_columns: bool, max_bytes: int) -> None:
    """Classify each row's text and write the perception-column CSV."""
    backend = (BackendConfig.from_json(backend_path.read_text())
               if backend_path else BackendConfig())
    selection = (selectable_perceptions() if perceptions.strip() == "all"
                 else tuple(p.strip() for p in perceptions.split(",") if p.strip()))
    config = AnalysisConfig(
        id_column=id_col,
        text_column=text_col,
        selected_perceptions=selection,
        backend=backend,
        include_text=include_text,
        include_aspect_columns=aspect_columns,
    )
    ingest = ingest_csv(input_path.read_bytes(), config, max_bytes)
    output = analyze_rows(ingest.rows, config)
    out_path.write_text(output.to_csv())
    for issue in ingest.issues:
        click.echo(f"ingest warning: {issue}", err=True)
    for warning in output.warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(f"wrote {len(output.rows)} rows to {out_path}")


@main.command("cost-estimate")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--text-col", default="text", show_default=True)
@click.option("--price-in", required=True, type=float, help="dollars per 1M input tokens")
@click.option("--price-out", required=True, type=float, help="dollars per 1M output tokens")
@click.option("--output-tokens-per-text", default=16, show_default=True,
              help="assumed reply length; an option letter plus chat overhead")
def cost_estimate(input_path: Path, text_col: str, price_in: float, price_out: float,
                  output_tokens_per_text: int) -> None:
    """Approximate spend before sending a corpus to a paid backend.

    Input tokens are estimated locally at ~1.34 tokens per word; real runs
    should rely on the backend's usage report."""
    import csv as _csv

    with input_path.open(newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        if reader.fieldnames is None or text_col not in reader.fieldnames:
            raise click.ClickException(f"column {text_col!r} not found")
        texts = [row[text_col] or "" for row in reader]
    input_tokens = sum(estimate_tokens(t) for t in texts)
    output_tokens = output_tokens_per_text * len(texts)
    cost = estimate_cost(input_tokens, output_tokens, price_in, price_out)
    click.echo(f"texts: {len(texts)}")
    click.echo(f"estimated input tokens: {input_tokens}")
    click.echo(f"assumed output tokens: {output_tokens}")
    click.echo(f"estimated cost: {format_usd(cost)}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--boot", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--level", default=0.95, show_default=True)
@click.option("--alpha", default=0.05, show_default=True)
@click.option("--out-csv", type=click.Path(path_type=Path))
@click.option("--out-json", type=click.Path(path_type=Path))
def mediate(input_path: Path, boot: int, seed: int, level: float, alpha: float,
            out_csv: Path | None, out_json: Path | None) -> None:
    """Estimate the rating/purchase system and per-emotion mediation."""
    records = read_product_csv(input_path.read_text())
    report = mediation_report(records, n_boot=boot, seed=seed, level=level, alpha=alpha)
    if out_csv:
        out_csv.write_text(report.to_csv())
        click.echo(f"wrote {out_csv}")
    if out_json:
        out_json.write_text(report.to_json_summary())
        click.echo(f"wrote {out_json}")
    if not out_csv and not out_json:
        click.echo(report.to_csv())


@main.command("train-toy")
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path),
              help="JSON overrides for the training config")
@click.option("--report-csv", type=click.Path(path_type=Path))
@click.option("--adapter-json", type=click.Path(path_type=Path))
def train_toy(config_path: Path | None, report_csv: Path | None,
              adapter_json: Path | None) -> None:
    """Run the five-word bigram fine-tuning demo."""
    overrides = json.loads(config_path.read_text()) if config_path else {}
    config = finetune.TrainConfig(**overrides)
    report, adapter, _ = finetune.run_demo(config)
    click.echo(f"initial loss: {report.train_losses[0]:.4f}")
    click.echo(f"final loss:   {report.train_losses[-1]:.4f}")
    click.echo(f"stopped at iteration {report.stop_iteration} ({report.stop_reason})")
    if report_csv:
        report_csv.write_text(report.to_csv())
        click.echo(f"wrote {report_csv}")
    if adapter_json:
        adapter_json.write_text(adapter.to_json())
        click.echo(f"wrote {adapter_json}")


@main.command("eval")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--truth", "truth_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_path", type=click.Path(path_type=Path))
def eval_cmd(pred_path: Path, truth_path: Path, out_path: Path | None) -> None:
    """Score predictions against truths.

    Both CSVs need columns (id, perception, label); rows are matched on
    (id, perception). Binary perceptions score present-vs-rest F1; three-way
    perceptions score one-vs-rest averaged F1."""
    import csv as _csv

    def load(path: Path) -> dict[tuple[str, str], str]:
        with path.open(newline="", encoding="utf-8") as fh:
            return {(r["id"], r["perception"]): r["label"] for r in _csv.DictReader(fh)}

    preds = load(pred_path)
    truths = load(truth_path)
    shared = sorted(set(preds) & set(truths))
    if not shared:
        raise click.ClickException("no (id, perception) pairs in common")
    by_perception: dict[str, list[tuple[str, str]]] = {}
    for key in shared:
        by_perception.setdefault(key[1], []).append((preds[key], truths[key]))

    scores = []
    for pid in sorted(by_perception):
        pairs = by_perception[pid]
        p_labels = [p for p, _ in pairs]
        t_labels = [t for _, t in pairs]
        labels = set(p_labels) | set(t_labels)
        if labels <= {PRESENT, NOT_PRESENT}:
            counts = metrics.confusion_for_class(p_labels, t_labels, PRESENT)
            f1 = metrics.prf1(counts)[2]
        else:
            _, f1 = metrics.multiclass_f1_ovr(
                p_labels, t_labels, (POSITIVE, NEGATIVE, NEUTRAL)
            )
        scores.append(metrics.TaskScore(task_id=pid, f1=f1, test_size=len(pairs)))

    table = metrics.scores_to_csv(scores)
    click.echo(table, nl=False)
    click.echo(f"macro_f1: {metrics.macro_f1(scores):.4f}")
    click.echo(f"weighted_f1: {metrics.weighted_f1(scores):.4f}")
    if out_path:
        out_path.write_text(table)
        click.echo(f"wrote {out_path}")


@main.command("synth-products")
@click.option("--n", default=10491, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--rho", default=0.5, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def synth_products(n: int, seed: int, rho: float, out_path: Path) -> None:
    """Generate a synthetic product-record CSV (clearly not real data)."""
    records = generate_products(SynthConfig(n_products=n, seed=seed, rho=rho))
    out_path.write_text(write_product_csv(records))
    click.echo(f"wrote {n} synthetic products to {out_path}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--data-dir", type=click.Path(path_type=Path),
              help="overrides LX_DATA_DIR")
@click.option("--retention-days", type=float, help="overrides LX_RETENTION_DAYS")
def serve(host: str, port: int, data_dir: Path | None, retention_days: float | None) -> None:
    """Run the batch analysis HTTP service."""
    import os

    import uvicorn

    from .service.api import DATA_DIR_ENV, RETENTION_ENV, create_app_from_env

    if data_dir is not None:
        os.environ[DATA_DIR_ENV] = str(data_dir)
    if retention_days is not None:
        os.environ[RETENTION_ENV] = str(retention_days)
    uvicorn.run(create_app_from_env(), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
