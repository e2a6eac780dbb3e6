import pathlib

import pytest

import dcsc
from dcsc.errors import ConfigError
from dcsc.internal.version import CURRENT_VERSION


def test_manifest_round_trip(tmp_path: pathlib.Path) -> None:
    manifest = dcsc.RunManifest(
        config={"out": "runs/x"},
        seed=3,
        fingerprints={"train": "abc", "test": "def"},
        known_intents=2,
        num_intents=8,
        losses={"warmup": {"ce": [1.5, 1.0]}},
        metrics={"acc": 0.5, "ari": 0.25, "nmi": 0.75},
    )
    path = tmp_path / "manifest.json"
    manifest.write(path)

    restored = dcsc.RunManifest.read(path)
    assert restored.metrics == dcsc.MetricReport(acc=0.5, ari=0.25, nmi=0.75)
    assert restored.head_metrics is None
    assert restored.losses == {"warmup": {"ce": [1.5, 1.0]}}
    assert restored.version == str(CURRENT_VERSION)
    assert restored.to_dict() == manifest.to_dict()
    assert path.read_text(encoding="utf-8").endswith("}\n")


def test_unreadable_manifest(tmp_path: pathlib.Path) -> None:
    with pytest.raises(ConfigError):
        dcsc.RunManifest.read(tmp_path / "missing.json")

    path = tmp_path / "manifest.json"
    path.write_text('{"seed": 1}', encoding="utf-8")
    with pytest.raises(ConfigError):
        dcsc.RunManifest.read(path)
