import json

import pytest
from click.testing import CliRunner

from entropy_osr.cli import dispatch, entropy_osr
from entropy_osr.data import read_csv
from entropy_osr.network import Arch, init_params, load_checkpoint


def test_commands_are_registered():
    result = CliRunner().invoke(entropy_osr, ["--help"])
    assert result.exit_code == 0
    for command in ("gen-data", "train", "eval", "sweep", "dump-features", "ablate", "self-test"):
        assert command in result.output


def test_runner_reports_errors(tiny_options):
    result = CliRunner().invoke(entropy_osr, ["eval", *tiny_options])
    assert result.exit_code != 0
    assert result.exception.exit_code == 3


def test_eval_without_checkpoint(tiny_options, capsys):
    assert dispatch(["eval", *tiny_options]) == 3
    assert capsys.readouterr().err.startswith("ERROR 3: checkpoint not found")


def test_unknown_key(tiny_options, capsys):
    assert dispatch(["train", *tiny_options, "--learning_rate", "0.1"]) == 2
    assert capsys.readouterr().err.startswith("ERROR 2: Invalid config key learning_rate")


def test_unknown_command(capsys):
    assert dispatch(["fit"]) == 2
    assert capsys.readouterr().err.startswith("ERROR 2:")


def test_train_zero_episodes(tmp_path, tiny_options, capsys):
    assert dispatch(["train", *tiny_options, "--episodes", "0"]) == 0
    params = load_checkpoint(tmp_path / "model.ckpt")
    assert params == init_params(Arch(input_size=16, conv_channels=(4, 8), n_closed=2), 0)
    assert params.step == 0
    assert read_csv(tmp_path / "reports" / "loss_curve.csv") == []
    assert "0 episodes finished" in capsys.readouterr().out


def test_train_refuses_overwrite(tmp_path, tiny_options, capsys):
    assert dispatch(["train", *tiny_options, "--episodes", "1"]) == 0
    before = (tmp_path / "model.ckpt").read_bytes()
    assert dispatch(["train", *tiny_options, "--episodes", "2"]) == 2
    assert "Refusing to overwrite" in capsys.readouterr().err
    assert (tmp_path / "model.ckpt").read_bytes() == before
    assert dispatch(["train", "--force", *tiny_options, "--episodes", "2"]) == 0
    assert load_checkpoint(tmp_path / "model.ckpt").step == 2


def test_train_and_evaluate(tmp_path, tiny_options, capsys):
    assert dispatch(["train", *tiny_options]) == 0
    curve = read_csv(tmp_path / "reports" / "loss_curve.csv")
    assert [row["episode"] for row in curve] == ["0", "1", "2"]
    assert set(curve[0]) == {"episode", "meta_ce", "entropy_dist", "open_bce", "total", "lr"}

    assert dispatch(["eval", *tiny_options]) == 0
    metrics = json.loads((tmp_path / "reports" / "metrics.json").read_text())
    assert metrics["checkpoint_step"] == 3
    assert metrics["seed"] == 0
    assert metrics["config"]["episodes"] == 3
    assert len(metrics["rounds"]) == 2
    assert 0.0 <= metrics["metrics"]["fpr"] <= 1.0
    assert capsys.readouterr().out.splitlines()[-1].startswith("tpr ")


def test_runs_are_reproducible(tmp_path, tiny_options):
    outputs = [tmp_path / "model.ckpt", tmp_path / "reports" / "loss_curve.csv", tmp_path / "reports" / "metrics.json"]
    runs = []
    for force in ([], ["--force"]):
        assert dispatch(["train", *force, *tiny_options]) == 0
        assert dispatch(["eval", *force, *tiny_options]) == 0
        runs.append([path.read_bytes() for path in outputs])
    assert runs[0] == runs[1]


def test_sweep_and_features(tmp_path, tiny_options):
    assert dispatch(["train", *tiny_options, "--episodes", "1"]) == 0
    assert dispatch(["sweep", *tiny_options]) == 0
    rows = read_csv(tmp_path / "reports" / "sweep.csv")
    assert len(rows) == 11
    assert (rows[0]["tpr"], rows[0]["fpr"]) == ("0.0", "0.0")
    assert (rows[-1]["tpr"], rows[-1]["fpr"]) == ("1.0", "1.0")
    assert (tmp_path / "reports" / "sweep.csv").read_text().startswith("# batch_size=256\n")

    assert dispatch(["dump-features", *tiny_options]) == 0
    features = read_csv(tmp_path / "reports" / "features.csv")
    assert len(features) == 24
    assert list(features[0])[:4] == ["sample_id", "true_class", "is_open", "p_open"]
    assert {row["is_open"] for row in features} <= {"true", "false"}


def test_sweep_rejects_unsorted_grid(tmp_path, tiny_options, capsys):
    assert dispatch(["train", *tiny_options, "--episodes", "0"]) == 0
    assert dispatch(["sweep", *tiny_options, "--sweep_grid", "0.5,0.1"]) == 2
    assert "sweep_grid" in capsys.readouterr().err


def test_eval_image_size_mismatch(tmp_path, tiny_options, capsys):
    assert dispatch(["train", *tiny_options, "--episodes", "0"]) == 0
    assert dispatch(["eval", *tiny_options, "--image_size", "32"]) == 3


def test_gen_data_and_train_from_files(tmp_path, tiny_options, capsys):
    data_dir = tmp_path / "data"
    assert dispatch(["gen-data", *tiny_options, "--data_dir", str(data_dir)]) == 0
    assert (data_dir / "train" / "manifest.csv").exists()
    assert (data_dir / "test" / "manifest.csv").exists()
    assert "train: 48 images" in capsys.readouterr().out
    assert dispatch(["gen-data", *tiny_options, "--data_dir", str(data_dir)]) == 2

    assert dispatch(["train", *tiny_options, "--data_dir", str(data_dir), "--episodes", "1"]) == 0
    assert dispatch(["eval", *tiny_options, "--data_dir", str(data_dir)]) == 0


def test_gen_data_needs_data_dir(tiny_options, capsys):
    assert dispatch(["gen-data", *tiny_options]) == 2
    assert "data_dir" in capsys.readouterr().err


def test_config_file(tmp_path, tiny_options):
    config = tmp_path / "run.yaml"
    config.write_text("episodes: 0\nseed: 5\n")
    assert dispatch(["train", "--config", str(config), *[o for o in tiny_options if o not in ("--episodes", "3")]]) == 0
    assert load_checkpoint(tmp_path / "model.ckpt").seed == 5


def test_self_test(tiny_options, capsys):
    assert dispatch(["self-test", *tiny_options]) == 0
    out = capsys.readouterr().out
    assert "episode:disc.weight" in out
    assert out.splitlines()[-1].startswith("max grad-check error: ")


def test_ablate(tmp_path, tiny_options, capsys):
    assert dispatch(["ablate", *tiny_options, "--episodes", "1", "--eval_rounds", "1"]) == 0
    fprs = json.loads(capsys.readouterr().out.splitlines()[-1])
    assert set(fprs) == {"full", "no_entropy", "no_meta_ce"}
    document = json.loads((tmp_path / "reports" / "ablation.json").read_text())
    assert set(document["variants"]) == set(fprs)


@pytest.mark.slow
def test_synthetic_acceptance(tmp_path, capsys):
    options = ["--checkpoint", str(tmp_path / "model.ckpt"), "--report_dir", str(tmp_path / "reports")]
    assert dispatch(["train", *options]) == 0
    assert dispatch(["eval", *options]) == 0
    metrics = json.loads((tmp_path / "reports" / "metrics.json").read_text())["metrics"]
    assert metrics["closed_accuracy"] >= 0.9
    assert metrics["tpr"] >= 0.9
    assert metrics["fpr"] <= 0.1


@pytest.mark.slow
def test_ablation_direction(tmp_path, capsys):
    options = ["--report_dir", str(tmp_path / "reports")]
    assert dispatch(["ablate", *options]) == 0
    fprs = json.loads(capsys.readouterr().out.splitlines()[-1])
    assert fprs["full"] <= fprs["no_entropy"]
