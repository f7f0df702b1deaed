"""Command-line behavior: outputs, exit codes, determinism, config files."""

import csv
import io
import json
import subprocess
import sys

import pytest

from treeprobe.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestOracle:
    def test_example_one(self, capsys):
        code, out, _ = run_cli(capsys, "oracle", "0.8", "1.5", "1.8", "2.4", "4.5", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["nearest"] == [1, 2, 2, 3, 4]
        assert payload["greedy_nearest"] == [1, 2, 2, 2, 3]
        assert payload["gaps_within_one"] is False

    def test_example_two(self, capsys):
        code, out, _ = run_cli(capsys, "oracle", "0.8", "1.5", "1.8", "2.4", "7.5", "--json")
        assert json.loads(out)["nearest"] == [1, 2, 3, 4, 5]

    def test_integer_member(self, capsys):
        code, out, _ = run_cli(capsys, "oracle", "1", "2", "3", "--json")
        payload = json.loads(out)
        assert payload["nearest"] == payload["greedy_nearest"] == [1, 2, 3]
        assert payload["nearest_distance"] == 0.0
        assert payload["greedy_nearest_distance"] == 0.0

    def test_cap_exit_code(self, capsys):
        code, _, err = run_cli(capsys, "oracle", *[str(v) for v in range(1, 13)])
        assert code == 2
        assert "cap" in err

    def test_greedy_only_unbounded(self, capsys):
        code, out, _ = run_cli(
            capsys, "oracle", *[str(v) for v in range(1, 30)], "--greedy-only", "--json"
        )
        assert code == 0
        assert "nearest" not in json.loads(out)


class TestLambda:
    def test_formula(self, capsys):
        code, out, _ = run_cli(capsys, "lambda", "--task-loss", "1.0", "--x-ssp", "0.05")
        assert code == 0
        assert float(out) == pytest.approx(2.0)

    def test_zero_ratio(self, capsys):
        _, out, _ = run_cli(
            capsys, "lambda", "--task-loss", "1.0", "--x-ssp", "0.5", "--ratio", "0"
        )
        assert float(out) == 0.0

    def test_zero_task_loss(self, capsys):
        _, out, _ = run_cli(capsys, "lambda", "--task-loss", "0", "--x-ssp", "0.5")
        assert float(out) == 0.0

    def test_nonpositive_metric_is_domain_error(self, capsys):
        code, _, err = run_cli(capsys, "lambda", "--task-loss", "1.0", "--x-ssp", "0")
        assert code == 2


@pytest.fixture(scope="module")
def synth_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    emb = root / "slice.tpeb"
    ann = root / "depths.jsonl"
    code = main(
        [
            "synth", "--sentences", "16", "--min-length", "3", "--max-length", "6",
            "--m", "3", "--n", "6", "--seed", "5",
            "--out-embeddings", str(emb), "--out-annotations", str(ann),
            "--out", str(root / "synth.json"),
        ]
    )
    assert code == 0
    return emb, ann, root


class TestPipeline:
    def test_train_eval_round_trip(self, synth_files, capsys):
        emb, ann, root = synth_files
        ckpt = root / "probe.tprb"
        code, out, _ = run_cli(
            capsys, "train", "--embeddings", str(emb), "--mode", "ssp",
            "--epochs", "1", "--probe-out", str(ckpt),
        )
        assert code == 0
        trained_metric = json.loads(out)["final_metric"]
        code, out, _ = run_cli(
            capsys, "eval", "--embeddings", str(emb), "--probe", str(ckpt),
            "--mode", "ssp",
        )
        assert code == 0
        assert json.loads(out)["metric"] == trained_metric

    def test_supervised_train_needs_annotations(self, synth_files, capsys):
        emb, _, _ = synth_files
        code, _, err = run_cli(
            capsys, "train", "--embeddings", str(emb), "--mode", "supervised",
            "--epochs", "1",
        )
        assert code == 2

    def test_missing_file_is_io_error(self, capsys):
        code, _, _ = run_cli(capsys, "eval", "--embeddings", "/nonexistent.tpeb",
                             "--probe", "/nonexistent.tprb")
        assert code == 1

    def test_sweep_outputs(self, synth_files, capsys):
        emb, ann, root = synth_files
        out_json = root / "sweep.json"
        code, out, _ = run_cli(
            capsys, "sweep", str(emb), "--annotations", str(ann),
            "--epochs", "1", "--exact", "--out-json", str(out_json),
        )
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 1
        row = rows[0]
        assert row["slice"] == "slice"
        assert float(row["x_ssp"]) <= float(row["x_sp_true"]) <= float(row["x_essp"])
        payload = json.loads(out_json.read_text())
        assert payload["slices"][0]["x_ssp"] == float(row["x_ssp"])

    def test_sweep_without_annotations_leaves_supervised_blank(self, synth_files, capsys):
        emb, _, _ = synth_files
        code, out, _ = run_cli(capsys, "sweep", str(emb), "--epochs", "1")
        assert code == 0
        row = list(csv.DictReader(io.StringIO(out)))[0]
        assert row["x_sp_true"] == ""
        assert row["x_ssp"] != ""

    def test_identical_slices_identical_rows(self, synth_files, capsys):
        emb, ann, _ = synth_files
        code, out, _ = run_cli(
            capsys, "sweep", str(emb), str(emb), "--annotations", str(ann),
            "--epochs", "1",
        )
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 2
        assert [rows[0][c] for c in rows[0] if c != "slice"] == [
            rows[1][c] for c in rows[1] if c != "slice"
        ]

    def test_config_file_supplies_defaults(self, synth_files, capsys):
        emb, _, root = synth_files
        cfg = root / "train.cfg"
        cfg.write_text("epochs=0\nmode=essp\n")
        code, out, _ = run_cli(
            capsys, "train", "--embeddings", str(emb), "--config", str(cfg)
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["mode"] == "essp"

    def test_flags_beat_config(self, synth_files, capsys):
        emb, _, root = synth_files
        cfg = root / "train2.cfg"
        cfg.write_text("mode=essp\n")
        code, out, _ = run_cli(
            capsys, "train", "--embeddings", str(emb), "--mode", "ssp",
            "--epochs", "0", "--config", str(cfg),
        )
        assert json.loads(out)["mode"] == "ssp"


class TestReport:
    def test_reference_groupings(self, capsys):
        code, out, _ = run_cli(capsys, "report", "--reference")
        assert code == 0
        payload = json.loads(out)
        first = payload["groupings"]["x_ssp"][1]
        assert first["lower"] == 0.01 and first["upper"] == 0.05
        assert first["slices"] == [f"M{i}" for i in range(12)]

    def test_reference_csv(self, capsys):
        code, out, _ = run_cli(capsys, "report", "--reference", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 25
        m8 = next(r for r in rows if r["slice"] == "M8")
        assert float(m8["x_sp_unbiased"]) == 0.1785

    def test_custom_bins(self, capsys):
        code, out, _ = run_cli(
            capsys, "report", "--reference", "--ssp-bins", "0.05,0.1"
        )
        groups = json.loads(out)["groupings"]["x_ssp"]
        assert len(groups) == 3

    def test_requires_source(self, capsys):
        code, _, _ = run_cli(capsys, "report")
        assert code == 2


def test_console_script_installed():
    result = subprocess.run(
        [sys.executable, "-m", "treeprobe.cli", "oracle", "1", "2", "--json"],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    assert json.loads(result.stdout)["nearest"] == [1, 2]
