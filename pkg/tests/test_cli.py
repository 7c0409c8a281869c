import json

import pytest
from click.testing import CliRunner

from lxkit.cli import main
from lxkit.mediation import write_product_csv
from lxkit.synthdata import SynthConfig, generate_products


@pytest.fixture()
def runner():
    return CliRunner()


INPUT_CSV = (
    "ID_num,TEXT\n"
    "1,I was irritated and sad\n"
    "2,Happy with the fair price\n"
)


def test_analyze_command(runner, tmp_path):
    src = tmp_path / "input.csv"
    src.write_text(INPUT_CSV)
    out = tmp_path / "out.csv"
    result = runner.invoke(main, [
        "analyze", "--input", str(src), "--id-col", "ID_num", "--text-col", "TEXT",
        "--perceptions", "anger,sadness,joy", "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0] == "ID_num,anger,sadness,joy,word_count"
    assert lines[1] == "1,1,1,0,5"


def test_analyze_all_perceptions(runner, tmp_path):
    src = tmp_path / "input.csv"
    src.write_text(INPUT_CSV)
    out = tmp_path / "out.csv"
    result = runner.invoke(main, [
        "analyze", "--input", str(src), "--id-col", "ID_num", "--text-col", "TEXT",
        "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    header = out.read_text().splitlines()[0].split(",")
    assert len(header) == 1 + 20 + 1  # id, 20 perceptions, word_count


def test_cost_estimate_command(runner, tmp_path):
    src = tmp_path / "texts.csv"
    src.write_text("text\nthis is a review of nine words exactly here\n")
    result = runner.invoke(main, [
        "cost-estimate", "--input", str(src), "--price-in", "10", "--price-out", "30",
    ])
    assert result.exit_code == 0, result.output
    assert "estimated input tokens: 12" in result.output  # round(9 * 1.34)
    assert "assumed output tokens: 16" in result.output
    assert "estimated cost" in result.output


def test_mediate_command(runner, tmp_path):
    products = tmp_path / "products.csv"
    products.write_text(write_product_csv(
        generate_products(SynthConfig(n_products=300, seed=4, rho=0.0))
    ))
    out_csv = tmp_path / "report.csv"
    out_json = tmp_path / "report.json"
    result = runner.invoke(main, [
        "mediate", "--input", str(products), "--boot", "120", "--seed", "7",
        "--out-csv", str(out_csv), "--out-json", str(out_json),
    ])
    assert result.exit_code == 0, result.output
    assert out_csv.read_text().startswith("term,rating_estimate")
    summary = json.loads(out_json.read_text())
    assert len(summary) == 16
    assert {entry["classification"] for entry in summary} <= {"full", "partial", "no_mediation"}


def test_train_toy_command(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"total_iterations": 150, "eval_every": 50}))
    report_csv = tmp_path / "losses.csv"
    adapter_json = tmp_path / "adapter.json"
    result = runner.invoke(main, [
        "train-toy", "--config", str(config),
        "--report-csv", str(report_csv), "--adapter-json", str(adapter_json),
    ])
    assert result.exit_code == 0, result.output
    assert "initial loss: 2.002" in result.output
    assert report_csv.read_text().startswith("iteration,train_loss,val_loss")
    adapter = json.loads(adapter_json.read_text())
    assert set(adapter) == {"r", "alpha", "A", "B"}


def test_eval_command(runner, tmp_path):
    pred = tmp_path / "pred.csv"
    truth = tmp_path / "truth.csv"
    pred.write_text(
        "id,perception,label\n1,joy,present\n2,joy,not_present\n"
        "1,trust,positive\n2,trust,neutral\n"
    )
    truth.write_text(
        "id,perception,label\n1,joy,present\n2,joy,present\n"
        "1,trust,positive\n2,trust,neutral\n"
    )
    result = runner.invoke(main, ["eval", "--pred", str(pred), "--truth", str(truth)])
    assert result.exit_code == 0, result.output
    assert "perception,test_size,f1" in result.output
    assert "macro_f1" in result.output and "weighted_f1" in result.output


def test_synth_products_command(runner, tmp_path):
    out = tmp_path / "products.csv"
    result = runner.invoke(main, [
        "synth-products", "--n", "60", "--seed", "3", "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert len(lines) == 61
    assert lines[0].startswith("product_id,average_rating,purchase_rate")
    assert lines[1].startswith("synthetic-")
