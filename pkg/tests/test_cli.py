import json

import pytest
import yaml

from synthslu.cli import main

TINY = [
    "model.family=maxpool",
    "model.encoder.conv_channels=[8]",
    "model.encoder.conv_kernels=[5]",
    "model.encoder.pool=[4]",
    "model.encoder.rnn_hidden=8",
    "train.optimizer=adam",
    "train.max_steps=4",
    "train.eval_every=50",
]


def flags(*pairs):
    out = []
    for p in pairs:
        out += ["--set", p]
    return out


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["toy-data", "--out", str(root / "toy"), "--n-sentences", "6"]) == 0
    return root


def test_toy_data_files(data):
    toy = data / "toy"
    assert (toy / "text.csv").exists()
    assert len((toy / "synthetic/manifest.csv").read_text().splitlines()) == 1 + 6 * 22


def test_synthesize_subset(data, tmp_path, capsys):
    rc = main(["synthesize", "--text", str(data / "toy/text.csv"), "--out", str(tmp_path / "s"), "--voices", "syn00,syn03"])
    assert rc == 0
    assert "12 records from 6 transcripts x 2 voices" in capsys.readouterr().out
    assert main(["synthesize", "--text", str(data / "toy/text.csv"), "--out", str(tmp_path / "x"), "--voices", "nobody"]) == 2


def test_train_then_evaluate(data, tmp_path, capsys):
    toy = data / "toy"
    out = tmp_path / "run"
    rc = main(["train", "--train", str(toy / "synthetic/manifest.csv"), "--test", str(toy / "real/test.csv"),
               "--out", str(out), "--set", f"data.text={toy / 'text.csv'}", *flags(*TINY)])
    assert rc == 0
    assert {"config.yaml", "model.pt", "history.jsonl", "metrics.json"} <= {p.name for p in out.iterdir()}
    trained = json.loads((out / "metrics.json").read_text())
    capsys.readouterr()
    assert main(["evaluate", "--model", str(out / "model.pt"), "--manifest", str(toy / "real/test.csv")]) == 0
    evaluated = json.loads(capsys.readouterr().out)
    assert evaluated["accuracy"] == pytest.approx(trained["accuracy"])


def test_sweep_and_report(data, tmp_path, capsys):
    toy = data / "toy"
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(yaml.safe_dump({
        "name": "s",
        "results_dir": str(tmp_path / "results"),
        "data": {"synthetic": str(toy / "synthetic/manifest.csv"), "test": str(toy / "real/test.csv"),
                 "text": str(toy / "text.csv")},
        "sweep": {"points": [1, 3], "runs_per_point": 1},
    }))
    assert main(["sweep", "--config", str(cfg), "--kind", "synthetic", *flags(*TINY)]) == 0
    out = capsys.readouterr().out
    assert "spearman" in out
    plot = tmp_path / "results/s/plot_accuracy.txt"
    assert plot.read_text().splitlines()[0] == "x y err"
    assert (tmp_path / "results/s/synthetic.config.yaml").exists()
    plot.unlink()
    assert main(["report", "--results", str(tmp_path / "results")]) == 0
    assert plot.exists()


def test_errors_exit_with_code_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,audio_path\n")
    assert main(["evaluate", "--model", str(tmp_path / "none.pt"), "--manifest", str(bad)]) == 2
    assert main(["train", "--train", str(bad), "--out", str(tmp_path / "o"), "--set", "train.lr=-1"]) == 2
    assert "error" in capsys.readouterr().err.lower()
