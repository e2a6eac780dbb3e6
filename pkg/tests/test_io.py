import json
import pathlib

import numpy as np
import pytest

import dcsc
from dcsc.errors import MalformedCorpusError, MalformedSampleError


def test_jsonl_keeps_sequences_and_missing_labels(tmp_path: pathlib.Path) -> None:
    corpus = dcsc.Corpus(
        [
            dcsc.Sample("a", [[1.0, 2.0], [3.0, 4.0]], 1),
            dcsc.Sample("b", [[0.5, 0.25]], None),
        ],
        num_intents=2,
    )
    path = tmp_path / "corpus.jsonl"
    dcsc.save_corpus(corpus, path)

    loaded = dcsc.load_corpus(path, num_intents=2)
    assert loaded.fingerprint() == corpus.fingerprint()
    assert loaded.samples[0].is_sequence
    assert loaded.samples[1].label is None


def test_csv_with_unlabeled_rows(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "corpus.csv"
    path.write_text("id,label,f0,f1\nx,0,1.5,2.5\ny,,0.0,-1.0\nz,2,3.0,4.0\n", encoding="utf-8")

    corpus = dcsc.load_corpus(path)
    assert corpus.num_intents == 3
    assert corpus.ids == ["x", "y", "z"]
    assert corpus.labels().tolist() == [0, -1, 2]
    np.testing.assert_array_equal(corpus.samples[1].features, [0.0, -1.0])


def test_malformed_line_reports_line_number(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "corpus.jsonl"
    lines = [
        json.dumps({"id": "a", "features": [1.0], "label": 0}),
        json.dumps({"id": "b", "features": [], "label": 0}),
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    with pytest.raises(MalformedCorpusError) as exc_info:
        dcsc.load_corpus(path)
    assert exc_info.value.line == 2


def test_non_integer_label(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "corpus.jsonl"
    path.write_text(json.dumps({"id": "a", "features": [1.0], "label": 0.5}) + "\n", encoding="utf-8")

    with pytest.raises(MalformedCorpusError):
        dcsc.load_corpus(path)


def test_csv_header_is_checked(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "corpus.csv"
    path.write_text("name,label,f0\na,0,1.0\n", encoding="utf-8")

    with pytest.raises(MalformedCorpusError):
        dcsc.load_corpus(path)


def test_sequences_cannot_be_written_as_csv(tmp_path: pathlib.Path) -> None:
    corpus = dcsc.Corpus([dcsc.Sample("a", [[1.0], [2.0]], 0)], num_intents=1)

    with pytest.raises(MalformedCorpusError):
        dcsc.save_corpus(corpus, tmp_path / "corpus.csv")


def test_unknown_suffix(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "corpus.parquet"
    path.write_bytes(b"")

    with pytest.raises(MalformedCorpusError):
        dcsc.load_corpus(path)


def test_empty_file_is_an_empty_corpus(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "corpus.jsonl"
    path.write_text("", encoding="utf-8")

    corpus = dcsc.load_corpus(path)
    assert len(corpus) == 0
    assert corpus.input_dim == 0


def test_missing_file(tmp_path: pathlib.Path) -> None:
    with pytest.raises(MalformedCorpusError, match="Cannot read corpus file"):
        dcsc.load_corpus(tmp_path / "missing.csv")


@pytest.mark.parametrize(
    "line",
    [
        b'[1, 2, 3]\n',
        b'{"id": "a", "features": "abc", "label": 0}\n',
        b'{"id": "a", "features": [[1.0, 2.0], [3.0]], "label": 0}\n',
        b'{"id": "a", "features": [1.0], "label": 0, "note": "\xff\xfe"}\n',
    ],
)
def test_malformed_jsonl_records(tmp_path: pathlib.Path, line: bytes) -> None:
    path = tmp_path / "corpus.jsonl"
    path.write_bytes(b'{"id": "ok", "features": [1.0], "label": 0}\n' + line)

    with pytest.raises(MalformedCorpusError) as exc_info:
        dcsc.load_corpus(path)
    assert exc_info.value.line == 2


def test_csv_with_invalid_utf8(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "corpus.csv"
    path.write_bytes(b"id,label,f0\na,0,1.0\nb\xff,1,2.0\n")

    with pytest.raises(MalformedCorpusError) as exc_info:
        dcsc.load_corpus(path)
    assert exc_info.value.line == 3


def test_ragged_features_are_a_sample_error() -> None:
    with pytest.raises(MalformedSampleError):
        dcsc.Sample("a", [[1.0, 2.0], [3.0]], 0)
