from __future__ import annotations

import csv
import json
import logging
import pathlib
import typing as t

from dcsc.data.corpus import Corpus, Sample
from dcsc.errors import DCSCError, MalformedCorpusError

__all__ = ("load_corpus", "save_corpus", "read_samples")

logger = logging.getLogger(__name__)

JSONL_SUFFIXES: t.Final[frozenset[str]] = frozenset({".jsonl", ".ndjson"})
CSV_SUFFIXES: t.Final[frozenset[str]] = frozenset({".csv"})


def _parse_label(value: t.Any, line: int) -> int | None:
    if value is None or value == "":
        return None
    try:
        label = int(value)
    except (TypeError, ValueError):
        raise MalformedCorpusError(f"Label {value!r} is not an integer.", line=line) from None
    if isinstance(value, float) and label != value:
        raise MalformedCorpusError(f"Label {value!r} is not an integer.", line=line)
    return label


def _decoded(fp: t.BinaryIO, path: pathlib.Path) -> t.Iterator[str]:
    for line_no, raw in enumerate(fp, start=1):
        try:
            yield raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedCorpusError(f"{path}:{line_no}: not valid UTF-8 ({e.reason}).", line=line_no) from e


def _read_jsonl(path: pathlib.Path) -> list[Sample]:
    samples: list[Sample] = []
    with path.open("rb") as fp:
        for line_no, line in enumerate(_decoded(fp, path), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise MalformedCorpusError(
                        f"{path}:{line_no}: expected a JSON object, got {type(record).__name__}.", line=line_no
                    )
                record = t.cast("dict[str, t.Any]", record)
                label = _parse_label(record.get("label"), line_no)
                samples.append(Sample(id=record["id"], features=record["features"], label=label))
            except MalformedCorpusError:
                raise
            except (ValueError, KeyError, TypeError, AttributeError, DCSCError) as e:
                raise MalformedCorpusError(f"{path}:{line_no}: {e}", line=line_no) from e
    return samples


def _read_csv(path: pathlib.Path) -> list[Sample]:
    samples: list[Sample] = []
    with path.open("rb") as fp:
        reader = csv.reader(_decoded(fp, path))
        header = next(reader, None)
        if header is None:
            return samples
        if header[:2] != ["id", "label"] or not all(col == f"f{i}" for i, col in enumerate(header[2:])):
            raise MalformedCorpusError(f"{path}: expected a header 'id,label,f0,...,fD', got {header}.", line=1)

        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                samples.append(
                    Sample(id=row[0], features=[float(v) for v in row[2:]], label=_parse_label(row[1], line_no))
                )
            except MalformedCorpusError:
                raise
            except (ValueError, IndexError, DCSCError) as e:
                raise MalformedCorpusError(f"{path}:{line_no}: {e}", line=line_no) from e
    return samples


def read_samples(path: str | pathlib.Path) -> list[Sample]:
    """Read the samples of a JSONL or CSV corpus file, chosen by file extension."""
    path = pathlib.Path(path)
    suffix = path.suffix.lower()
    try:
        if suffix in JSONL_SUFFIXES:
            return _read_jsonl(path)
        if suffix in CSV_SUFFIXES:
            return _read_csv(path)
    except OSError as e:
        raise MalformedCorpusError(f"Cannot read corpus file '{path}': {e}") from e
    raise MalformedCorpusError(f"Unsupported corpus format '{suffix}', expected .jsonl or .csv.")


def load_corpus(path: str | pathlib.Path, *, num_intents: int | None = None) -> Corpus:
    """Load a corpus from a JSONL or CSV file.

    Parameters
    ----------
    path : str | pathlib.Path
        Path to a `.jsonl` or `.csv` file.
    num_intents : int | None
        The intent count `G`. If omitted, it is inferred as one more than the largest label.

    Returns
    -------
    Corpus
        The loaded corpus.

    Raises
    ------
    MalformedCorpusError
        If the file cannot be parsed or violates corpus invariants.
    """
    samples = read_samples(path)
    if num_intents is None:
        labels = [s.label for s in samples if s.label is not None]
        num_intents = max(labels) + 1 if labels else 1

    corpus = Corpus(samples, num_intents=num_intents)
    logger.debug(f"Loaded {len(corpus)} samples with {corpus.num_intents} intents from '{path}'.")
    return corpus


def save_corpus(corpus: Corpus | t.Sequence[Sample], path: str | pathlib.Path) -> None:
    """Write samples to a JSONL or CSV file, chosen by file extension.

    Token-sequence samples can only be written as JSONL.
    """
    path = pathlib.Path(path)
    samples = list(corpus)
    suffix = path.suffix.lower()
    path.parent.mkdir(parents=True, exist_ok=True)

    if suffix in JSONL_SUFFIXES:
        with path.open("w", encoding="utf-8") as fp:
            for sample in samples:
                record = {"id": sample.id, "features": sample.features.tolist(), "label": sample.label}
                fp.write(json.dumps(record) + "\n")
        return

    if suffix in CSV_SUFFIXES:
        if any(s.is_sequence for s in samples):
            raise MalformedCorpusError("Token-sequence samples cannot be written as CSV.")
        width = samples[0].input_dim if samples else 0
        with path.open("w", encoding="utf-8", newline="") as fp:
            writer = csv.writer(fp)
            writer.writerow(["id", "label", *(f"f{i}" for i in range(width))])
            for sample in samples:
                label = "" if sample.label is None else sample.label
                writer.writerow([sample.id, label, *map(repr, sample.features.tolist())])
        return

    raise MalformedCorpusError(f"Unsupported corpus format '{suffix}', expected .jsonl or .csv.")

# MIT License
#
# Copyright (c) 2024-present dcsc contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
