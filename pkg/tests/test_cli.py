import json
import pathlib

import numpy as np
import pytest

import dcsc
from dcsc import cli
from dcsc.config import TrainConfig
from dcsc.data.split import split_corpus
from dcsc.trainer import initial_state


def _error(err: str) -> dict[str, str]:
    return json.loads([line for line in err.splitlines() if line.startswith("{")][-1])


def _metrics(path: pathlib.Path) -> dict[str, float]:
    return json.loads((path / "metrics.json").read_text(encoding="utf-8"))


@pytest.fixture
def checkpoint_path(
    tmp_path: pathlib.Path, blobs: dcsc.Corpus, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> pathlib.Path:
    split = split_corpus(blobs, dcsc.SplitSpec(known_fraction=0.5, labeled_ratio=0.2))
    state = initial_state(small_encoder_config, fast_config, known_intents=2, num_intents=4)
    dcsc.init_cluster_head(state, split, fast_config)
    return dcsc.save_checkpoint(tmp_path / "cluster.npz", state, intent_relabeling=split.intent_relabeling)


def test_info(capsys: pytest.CaptureFixture[str]) -> None:
    assert cli.main(["info"]) == 0
    assert f"dcsc version: {dcsc.__version__}" in capsys.readouterr().out


def test_generate(tmp_path: pathlib.Path) -> None:
    assert cli.main(["generate", "easy", "--out", str(tmp_path), "--seed", "1", "--format", "csv"]) == 0

    train = dcsc.load_corpus(tmp_path / "train.csv")
    assert len(train) == 1400
    assert len(dcsc.load_corpus(tmp_path / "validation.csv", num_intents=10)) == 200
    assert len(dcsc.load_corpus(tmp_path / "test.csv", num_intents=10)) == 400


def test_run_is_reproducible(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture[str]) -> None:
    first = tmp_path / "first"
    argv = ["run", "--synth", "easy", "--epochs-warmup", "1", "--epochs-cluster", "1", "--seed", "2"]
    assert cli.main([*argv, "--out", str(first)]) == 0

    metrics = _metrics(first)
    assert 0.0 <= metrics["acc"] <= 1.0
    assert -1.0 <= metrics["ari"] <= 1.0
    assert 0.0 <= metrics["nmi"] <= 1.0
    assert (first / "checkpoints" / "warmup.npz").is_file()
    assert (first / "checkpoints" / "cluster.npz").is_file()
    assert "| DCSC |" in (first / "report.md").read_text(encoding="utf-8")
    assert "K-Means++ (raw)" in capsys.readouterr().out

    manifest = dcsc.RunManifest.read(first / "manifest.json")
    assert manifest.seed == 2
    assert manifest.known_intents == 2
    assert manifest.num_intents == 10

    second = tmp_path / "second"
    assert cli.main(["run", "--from-manifest", str(first / "manifest.json"), "--out", str(second)]) == 0
    assert _metrics(second) == metrics


def test_run_without_training_matches_initial_baseline(tmp_path: pathlib.Path) -> None:
    argv = ["run", "--synth", "easy", "--epochs-warmup", "0", "--epochs-cluster", "0", "--out", str(tmp_path)]
    assert cli.main(argv) == 0

    manifest = dcsc.RunManifest.read(tmp_path / "manifest.json")
    assert manifest.init_baseline is not None
    assert manifest.metrics == manifest.init_baseline
    assert manifest.losses == {}


def test_run_errors_are_reported_as_json(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert cli.main(["run", "--config", str(tmp_path / "missing.toml")]) == 1

    error = _error(capsys.readouterr().err)
    assert error["error"] == "ConfigError"
    assert "missing.toml" in error["message"]


def test_malformed_corpus_is_reported_as_json(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture[str]) -> None:
    corpus = tmp_path / "train.jsonl"
    corpus.write_text('{"id": "a", "features": [1.0], "label": 0}\n[1, 2]\n', encoding="utf-8")
    root = tmp_path.as_posix()
    config = tmp_path / "run.toml"
    config.write_text(
        f'out = "{root}/out"\n\n[data]\ntrain = "{root}/train.jsonl"\ntest = "{root}/train.jsonl"\n',
        encoding="utf-8",
    )

    assert cli.main(["run", "--config", str(config)]) == 1
    error = _error(capsys.readouterr().err)
    assert error["error"] == "MalformedCorpusError"
    assert "train.jsonl:2" in error["message"]


def test_sweep_needs_known_fractions(capsys: pytest.CaptureFixture[str]) -> None:
    assert cli.main(["sweep", "--synth", "easy", "--known-fractions"]) == 2
    assert "at least one known fraction" in capsys.readouterr().err


def test_small_sweep_with_ablation(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture[str]) -> None:
    argv = [
        "sweep",
        "--synth",
        "easy",
        "--known-fractions",
        "0.5",
        "--seeds",
        "0",
        "--ablation",
        "--baselines",
        "--epochs-warmup",
        "0",
        "--epochs-cluster",
        "1",
        "--workers",
        "1",
        "--out",
        str(tmp_path),
    ]
    assert cli.main(argv) == 0

    table = capsys.readouterr().out
    assert "| 50% | K-Means++ (raw) |" in table
    assert "| 50% | DCSC |" in table
    assert "| 50% | DCSC\N{DAGGER} |" in table
    assert (tmp_path / "sweep.md").read_text(encoding="utf-8") == table
    assert (tmp_path / "kf0.50-seed0-full" / "metrics.json").is_file()
    assert (tmp_path / "kf0.50-seed0-ablation" / "metrics.json").is_file()


def test_assign(tmp_path: pathlib.Path, checkpoint_path: pathlib.Path, blobs: dcsc.Corpus) -> None:
    corpus_path = tmp_path / "corpus.jsonl"
    dcsc.save_corpus(blobs, corpus_path)
    out = tmp_path / "assignments.jsonl"

    assert cli.main(["assign", str(checkpoint_path), str(corpus_path), "--out", str(out)]) == 0

    records = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
    assert [r["id"] for r in records] == blobs.ids
    assert all(0 <= r["cluster"] < 4 for r in records)
    assert all(r["known_intent_flag"] == (r["cluster"] < 2) for r in records)


def test_assign_empty_corpus(tmp_path: pathlib.Path, checkpoint_path: pathlib.Path) -> None:
    corpus_path = tmp_path / "empty.jsonl"
    corpus_path.write_text("", encoding="utf-8")
    out = tmp_path / "assignments.jsonl"

    assert cli.main(["assign", str(checkpoint_path), str(corpus_path), "--out", str(out)]) == 0
    assert out.read_text(encoding="utf-8") == ""


def test_assign_dimension_mismatch(
    tmp_path: pathlib.Path, checkpoint_path: pathlib.Path, capsys: pytest.CaptureFixture[str]
) -> None:
    corpus_path = tmp_path / "wide.jsonl"
    dcsc.save_corpus(dcsc.Corpus([dcsc.Sample("a", np.zeros(9))], num_intents=1), corpus_path)

    assert cli.main(["assign", str(checkpoint_path), str(corpus_path), "--out", str(tmp_path / "out.jsonl")]) == 1
    assert _error(capsys.readouterr().err)["error"] == "ShapeMismatchError"


def test_thread_cap(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(cli.THREADS_ENV, raising=False)
    assert cli.threads() is None

    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert cli.threads() == 3

    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    with pytest.raises(dcsc.ConfigError):
        cli.threads()


def test_sweep_parallelism_respects_thread_cap() -> None:
    assert cli.sweep_parallelism(None, None) == (1, None)
    assert cli.sweep_parallelism(4, None) == (4, None)
    assert cli.sweep_parallelism(None, 6) == (6, 1)
    assert cli.sweep_parallelism(8, 2) == (2, 1)
    assert cli.sweep_parallelism(2, 7) == (2, 3)
    assert cli.sweep_parallelism(0, 3) == (3, 1)
