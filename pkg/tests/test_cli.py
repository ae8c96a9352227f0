"""Command dispatch, exit codes, and run-directory artifacts."""

import json

import numpy as np
import pytest

from lcalearn import cli
from lcalearn import experiment as experiment_mod
from lcalearn.data import EventRecord, save_events


@pytest.fixture()
def config_path(tmp_path):
    raw = {
        "dataset": {
            "kind": "synthetic", "seed": 1, "height": 8, "width": 8, "frames": 2,
            "train_per_class": 3, "valid_per_class": 2,
        },
        "dict_size": 16,
        "lambda": 0.3,
        "dt": 1.0, "tau": 10.0, "display_ms": 30.0,
        "epochs": 1, "learning_rate": 0.01, "seed": 0,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


class TestExitCodes:
    def test_missing_config_is_usage_error(self, tmp_path, capsys):
        code = run("train", "--config", tmp_path / "missing.json", "--out", tmp_path / "o")
        captured = capsys.readouterr()
        assert code == 1
        assert "missing.json" in captured.err

    def test_unknown_command_is_usage_error(self, capsys):
        assert run("frobnicate") == 1

    def test_unknown_flag_is_usage_error(self, config_path, tmp_path, capsys):
        code = run("train", "--config", config_path, "--out", tmp_path / "o", "--fast")
        assert code == 1

    def test_invalid_config_key_is_usage_error(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"dataset": {"kind": "synthetic"}, "dict_size": 4,
                                    "lambda": 0.1, "momentum": 1}))
        code = run("train", "--config", path, "--out", tmp_path / "o")
        captured = capsys.readouterr()
        assert code == 1
        assert "momentum" in captured.err

    def test_corrupt_data_file_is_runtime_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.evt"
        bad.write_bytes(b"NOPE" + b"\x00" * 16)
        code = run("events-to-frames", "--input", bad, "--out", tmp_path / "o")
        assert code == 2

    def test_missing_out_is_usage_error(self, config_path, capsys):
        assert run("train", "--config", config_path) == 1

    def test_interrupt_writes_partial_marker(self, config_path, tmp_path, monkeypatch, capsys):
        def boom(*args, **kwargs):
            raise KeyboardInterrupt

        monkeypatch.setattr(experiment_mod, "run_training", boom)
        out = tmp_path / "o"
        code = run("train", "--config", config_path, "--out", out)
        assert code == 2
        assert (out / "partial.marker").exists()


class TestTrain:
    def test_writes_run_directory(self, config_path, tmp_path, capsys):
        out = tmp_path / "run"
        assert run("train", "--config", config_path, "--out", out) == 0
        assert (out / "config.json").read_bytes() == config_path.read_bytes()
        assert (out / "metrics.csv").exists()
        assert (out / "dict_epoch_1.lcad").exists()

    def test_rerun_is_byte_identical(self, config_path, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("train", "--config", config_path, "--out", a) == 0
        assert run("train", "--config", config_path, "--out", b) == 0
        assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
        assert (a / "dict_epoch_1.lcad").read_bytes() == (b / "dict_epoch_1.lcad").read_bytes()

    def test_seed_override_changes_metrics(self, config_path, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("train", "--config", config_path, "--out", a) == 0
        assert run("train", "--config", config_path, "--out", b, "--seed", 5) == 0
        assert (a / "metrics.csv").read_bytes() != (b / "metrics.csv").read_bytes()

    def test_init_dict_flag(self, config_path, tmp_path, capsys):
        first = tmp_path / "first"
        second = tmp_path / "second"
        assert run("train", "--config", config_path, "--out", first) == 0
        assert run(
            "train", "--config", config_path, "--out", second,
            "--init-dict", first / "dict_epoch_1.lcad",
        ) == 0


class TestSynth:
    def test_deterministic_across_invocations(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("synth", "--seed", 7, "--out", a) == 0
        assert run("synth", "--seed", 7, "--out", b) == 0
        for name in ("train_inputs.npy", "train_labels.npy",
                     "valid_inputs.npy", "valid_labels.npy"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_spec_overrides(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"n_classes": 2, "train_per_class": 3,
                                    "valid_per_class": 1, "height": 4, "width": 4,
                                    "frames": 2}))
        out = tmp_path / "d"
        assert run("synth", "--seed", 0, "--out", out, "--config", spec) == 0
        labels = np.load(out / "train_labels.npy")
        assert labels.shape == (6,)

    def test_bad_spec_key_is_usage_error(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"wibble": 3}))
        assert run("synth", "--seed", 0, "--out", tmp_path / "d", "--config", spec) == 1


class TestSweep:
    def test_table_has_row_per_value(self, config_path, tmp_path, capsys):
        out = tmp_path / "sw"
        code = run(
            "sweep", "--config", config_path, "--out", out,
            "--axis", "s", "--values", "1,5,10,20",
        )
        captured = capsys.readouterr()
        assert code == 0
        lines = [l for l in captured.out.strip().splitlines() if l]
        assert len(lines) == 5  # header + 4 rows
        csv_lines = (out / "sweep.csv").read_text().strip().splitlines()
        assert len(csv_lines) == 5

    def test_bad_axis_is_usage_error(self, config_path, tmp_path, capsys):
        code = run(
            "sweep", "--config", config_path, "--out", tmp_path / "sw",
            "--axis", "momentum", "--values", "1",
        )
        assert code == 1


class TestInfer:
    def test_graded_writes_trace(self, config_path, tmp_path, capsys):
        train_out = tmp_path / "run"
        assert run("train", "--config", config_path, "--out", train_out) == 0
        out = tmp_path / "inf"
        code = run(
            "infer", "--config", config_path, "--out", out,
            "--dict", train_out / "dict_epoch_1.lcad",
        )
        assert code == 0
        assert (out / "trace.csv").exists()
        assert (out / "code.npy").exists()
        assert (out / "reconstruction.npy").exists()

    def test_spiking_writes_raster(self, tmp_path, capsys):
        config = {
            "dataset": {"kind": "synthetic", "seed": 1, "height": 8, "width": 8,
                        "frames": 2, "train_per_class": 3, "valid_per_class": 2},
            "dict_size": 16, "lambda": 0.3, "spike_height": 0.5,
            "dt": 1.0, "tau": 10.0, "display_ms": 30.0,
            "epochs": 1, "learning_rate": 0.01, "seed": 0,
        }
        path = tmp_path / "spk.json"
        path.write_text(json.dumps(config))
        train_out = tmp_path / "run"
        assert run("train", "--config", path, "--out", train_out) == 0
        out = tmp_path / "inf"
        assert run("infer", "--config", path, "--out", out,
                   "--dict", train_out / "dict_epoch_1.lcad") == 0
        assert (out / "raster.csv").exists()

    def test_index_out_of_range_is_usage_error(self, config_path, tmp_path, capsys):
        train_out = tmp_path / "run"
        assert run("train", "--config", config_path, "--out", train_out) == 0
        code = run(
            "infer", "--config", config_path, "--out", tmp_path / "inf",
            "--dict", train_out / "dict_epoch_1.lcad", "--index", 999,
        )
        assert code == 1


class TestClassify:
    def test_train_then_eval(self, config_path, tmp_path, capsys):
        train_out = tmp_path / "run"
        assert run("train", "--config", config_path, "--out", train_out) == 0
        cls_out = tmp_path / "cls"
        assert run(
            "classify-train", "--config", config_path, "--out", cls_out,
            "--dict", train_out / "dict_epoch_1.lcad",
        ) == 0
        assert (cls_out / "classifier.lcls").exists()
        code = run(
            "classify-eval", "--config", config_path,
            "--dict", train_out / "dict_epoch_1.lcad",
            "--model", cls_out / "classifier.lcls",
            "--out", tmp_path / "ev",
        )
        captured = capsys.readouterr()
        assert code == 0
        assert "accuracy" in captured.out
        assert (tmp_path / "ev" / "eval.json").exists()


class TestEventsToFrames:
    def test_converts_file(self, tmp_path, capsys):
        rec = tmp_path / "r.evt"
        events = [EventRecord(100 * k, k % 3, 0, 1) for k in range(30)]
        save_events(rec, events, width=4, height=4)
        out = tmp_path / "frames"
        assert run("events-to-frames", "--input", rec, "--out", out,
                   "--window-us", 1000) == 0
        frames = np.load(out / "frames.npy")
        assert frames.shape == (3, 4, 4)


class TestExportCommands:
    def test_export_dict_and_recon(self, config_path, tmp_path, capsys):
        train_out = tmp_path / "run"
        assert run("train", "--config", config_path, "--out", train_out) == 0
        fig = tmp_path / "fig"
        assert run("export-dict", "--dict", train_out / "dict_epoch_1.lcad",
                   "--out", fig, "--top-k", 4) == 0
        assert (fig / "dictionary.pgm").exists()
        captured = capsys.readouterr()
        assert "index order" in captured.err  # no activity ranking given
        fig2 = tmp_path / "fig2"
        assert run("export-recon", "--config", config_path,
                   "--dict", train_out / "dict_epoch_1.lcad",
                   "--out", fig2, "--count", 3) == 0
        assert (fig2 / "reconstructions.pgm").exists()

    def test_export_images_deterministic(self, config_path, tmp_path, capsys):
        train_out = tmp_path / "run"
        assert run("train", "--config", config_path, "--out", train_out) == 0
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("export-dict", "--dict", train_out / "dict_epoch_1.lcad",
                       "--out", out) == 0
        assert (a / "dictionary.pgm").read_bytes() == (b / "dictionary.pgm").read_bytes()


class TestConvCheck:
    def test_passes_by_default(self, capsys):
        assert run("conv-check") == 0
        report = json.loads(capsys.readouterr().out)
        assert report["passed"]

    def test_mismatched_kernel_reports_not_applicable(self, capsys):
        assert run("conv-check", "--size", 4, "--kernel", 2) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["status"] == "not-applicable"
