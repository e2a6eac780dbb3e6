"""Command-line front end.

Exit codes: `0` on success, `1` when a run fails (a JSON error object is written to stderr),
`2` on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import pathlib
import platform
import sys
import typing as t

import numpy as np
import torch

from dcsc import synth
from dcsc.checkpoint import load_checkpoint
from dcsc.config import RunConfig, SweepConfig, apply_overrides, load_mapping
from dcsc.data.io import read_samples, save_corpus
from dcsc.encoder import encode
from dcsc.errors import ConfigError, DCSCError, ShapeMismatchError, SweepFailedError
from dcsc.internal.about import __version__
from dcsc.manifest import RunManifest
from dcsc.pipeline import run_experiment
from dcsc.sweep import format_table, run_sweep

if t.TYPE_CHECKING:
    from dcsc.metrics import MetricReport

__all__ = (
    "main",
    "cmd_run",
    "cmd_sweep",
    "cmd_assign",
    "cmd_info",
    "cmd_generate",
    "build_parser",
    "threads",
    "sweep_parallelism",
)

logger = logging.getLogger(__name__)

THREADS_ENV: t.Final[str] = "DCSC_THREADS"


class UsageError(Exception):
    """Invalid command-line usage detected after parsing."""


def threads() -> int | None:
    """The parallelism cap from `DCSC_THREADS`, or `None` if unset.

    Raises
    ------
    ConfigError
        If the variable is set to anything but a positive integer.
    """
    value = os.environ.get(THREADS_ENV)
    if value is None or value == "":
        return None
    try:
        count = int(value)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {value!r}.") from None
    if count < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {count}.")
    return count


def sweep_parallelism(requested: int | None, cap: int | None) -> tuple[int, int | None]:
    """Worker processes and torch threads per worker for a sweep.

    The workers never exceed `cap`, and neither do their threads combined.

    Returns
    -------
    tuple[int, int | None]
        The worker count and the thread count of every worker, `None` when uncapped.
    """
    workers = max(1, requested or cap or 1)
    if cap is None:
        return workers, None
    workers = min(workers, cap)
    return workers, cap // workers


def _load(config_path: str | None) -> dict[str, t.Any]:
    return load_mapping(config_path) if config_path is not None else {}


def _report_table(known_fraction: float, rows: t.Sequence[tuple[str, MetricReport | None]]) -> str:
    lines = ["| Known | Method | ACC | ARI | NMI |", "|---|---|---|---|---|"]
    for method, report in rows:
        if report is not None:
            lines.append(
                f"| {known_fraction:.0%} | {method} | {report.acc:.4f} | {report.ari:.4f} | {report.nmi:.4f} |"
            )
    return "\n".join(lines) + "\n"


def cmd_run(
    config_path: str | None, overrides: t.Mapping[str, t.Any] | None = None, *, manifest_path: str | None = None
) -> int:
    """Run one configuration end to end and write its artifacts.

    Parameters
    ----------
    config_path : str | None
        TOML or JSON configuration file; built-in defaults are used without one.
    overrides : t.Mapping[str, t.Any] | None
        Dotted configuration keys set from the command line; `None` values are ignored.
    manifest_path : str | None
        Re-run the configuration recorded in this manifest instead of reading `config_path`.

    Returns
    -------
    int
        The exit code.

    Raises
    ------
    DataMismatchError
        If a corpus of a manifest re-run changed since the manifest was written.
    """
    expected: dict[str, str] | None = None
    if manifest_path is not None:
        recorded = RunManifest.read(manifest_path)
        mapping, expected = recorded.config, recorded.fingerprints
    else:
        mapping = _load(config_path)

    config = RunConfig.from_mapping(apply_overrides(mapping, overrides or {}))
    result = run_experiment(config, expected_fingerprints=expected)

    table = _report_table(
        config.split.known_fraction,
        [
            ("K-Means++ (raw)", result.manifest.raw_baseline),
            ("DCSC", result.evaluation.metrics),
            ("DCSC (head)", result.evaluation.head_metrics),
        ],
    )
    (pathlib.Path(config.out) / "report.md").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return 0


def cmd_sweep(
    config_path: str | None,
    overrides: t.Mapping[str, t.Any] | None = None,
    *,
    workers: int | None = None,
    baselines: bool = False,
) -> int:
    """Run a grid of known fractions and seeds and print the aggregated table.

    Returns
    -------
    int
        The exit code.

    Raises
    ------
    UsageError
        If the grid has no known fractions.
    SweepFailedError
        If any cell failed; the table of the remaining cells is still written.
    """
    mapping = apply_overrides(_load(config_path), overrides or {})
    if "known_fractions" in mapping.get("sweep", {}) and not mapping["sweep"]["known_fractions"]:
        raise UsageError("The sweep needs at least one known fraction.")

    sweep = SweepConfig.from_mapping(mapping)
    base = {key: value for key, value in mapping.items() if key != "sweep"}
    out = pathlib.Path(RunConfig.from_mapping(base).out)

    worker_count, worker_threads = sweep_parallelism(workers or sweep.workers, threads())
    result = run_sweep(base, sweep, out=out, workers=worker_count, threads=worker_threads)

    table = format_table(result, baselines=baselines)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.md").write_text(table, encoding="utf-8")
    sys.stdout.write(table)

    if failed := result.failed_cells:
        raise SweepFailedError(failed)
    return 0


def cmd_assign(checkpoint_path: str, corpus_path: str, out_path: str) -> int:
    """Assign every sample of a corpus to a cluster of a trained checkpoint.

    Writes one JSON line `{"id", "cluster", "known_intent_flag"}` per sample, where the flag marks
    clusters aligned with a known intent.

    Raises
    ------
    ShapeMismatchError
        If the corpus feature dimension differs from the checkpoint's.
    """
    checkpoint = load_checkpoint(checkpoint_path)
    samples = read_samples(corpus_path)

    expected = checkpoint.encoder.config.input_dim
    if wrong := next((s for s in samples if s.input_dim != expected), None):
        raise ShapeMismatchError(
            (expected,),
            (wrong.input_dim,),
            f"Sample '{wrong.id}' has {wrong.input_dim} features, the encoder expects {expected}.",
        )

    clusters = np.zeros(0, dtype=np.int64)
    if samples:
        representations = encode(checkpoint.encoder, samples)
        clusters = np.argmax(representations @ checkpoint.head.detach().numpy().T, axis=1)

    path = pathlib.Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fp:
        for sample, cluster in zip(samples, clusters.tolist()):
            record = {"id": sample.id, "cluster": cluster, "known_intent_flag": cluster < checkpoint.known_intents}
            fp.write(json.dumps(record) + "\n")

    logger.info(f"Assigned {len(samples)} sample(s) to clusters, written to {path}.")
    return 0


def cmd_generate(preset: str, out_dir: str, *, seed: int | None = None, fmt: str = "jsonl") -> int:
    """Write the train, validation and test corpora of a synthetic preset."""
    splits = synth.generate_splits(synth.preset(preset, seed=seed))
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, corpus in (("train", splits.train), ("validation", splits.validation), ("test", splits.test)):
        save_corpus(corpus, out / f"{name}.{fmt}")
    logger.info(f"Wrote synthetic preset '{preset}' to {out}.")
    return 0


def cmd_info() -> int:
    """Print package and environment information."""
    uname = platform.uname()
    system_details = f"{uname.system} {uname.machine} ({uname.node}) - {uname.release}"
    python_details = f"{platform.python_implementation()} {platform.python_version()} ({platform.python_compiler()})"
    install_path = os.path.abspath(os.path.dirname(__file__))

    sys.stdout.write(
        f"""dcsc - package information
--------------------------
dcsc version: {__version__}
Install path: {install_path}
torch version: {torch.__version__}
numpy version: {np.__version__}
Python: {python_details}
System: {system_details}
"""
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcsc", description="Semi-supervised deep clustering of intents.")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Train and evaluate one configuration.")
    run.add_argument("--config", help="TOML or JSON configuration file.")
    run.add_argument("--from-manifest", dest="manifest", help="Re-run the configuration recorded in a run manifest.")
    run.add_argument("--synth", choices=sorted(synth.PRESETS), help="Use a synthetic preset as data.")
    run.add_argument("--known-fraction", type=float)
    run.add_argument("--labeled-ratio", type=float)
    run.add_argument("--seed", type=int, help="Root seed; also seeds the split.")
    run.add_argument("--epochs-warmup", type=int)
    run.add_argument("--epochs-cluster", type=int)
    run.add_argument("--tau", type=float)
    run.add_argument("--sinkhorn-eps", type=float)
    run.add_argument("--sinkhorn-iters", type=int)
    run.add_argument("--ablate-sup-cluster", action="store_true", default=None)
    run.add_argument("--out")

    sweep = commands.add_parser("sweep", help="Run a grid of known fractions and seeds.")
    sweep.add_argument("--config")
    sweep.add_argument("--synth", choices=sorted(synth.PRESETS))
    sweep.add_argument("--known-fractions", type=float, nargs="*")
    sweep.add_argument("--seeds", type=int, nargs="+")
    sweep.add_argument(
        "--ablation", action="store_true", default=None, help="Add rows without clustering-stage supervision."
    )
    sweep.add_argument("--epochs-warmup", type=int)
    sweep.add_argument("--epochs-cluster", type=int)
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--baselines", action="store_true", help="Add raw-feature K-Means++ rows.")
    sweep.add_argument("--out")

    assign = commands.add_parser("assign", help="Assign a corpus to the clusters of a checkpoint.")
    assign.add_argument("checkpoint")
    assign.add_argument("corpus")
    assign.add_argument("--out", required=True)

    generate = commands.add_parser("generate", help="Write a synthetic corpus to disk.")
    generate.add_argument("preset", choices=sorted(synth.PRESETS))
    generate.add_argument("--out", required=True)
    generate.add_argument("--seed", type=int)
    generate.add_argument("--format", dest="fmt", choices=["jsonl", "csv"], default="jsonl")

    commands.add_parser("info", help="Print package and environment information.")
    return parser


def _run_overrides(args: argparse.Namespace) -> dict[str, t.Any]:
    return {
        "data.synth": args.synth,
        "split.known_fraction": args.known_fraction,
        "split.labeled_ratio": args.labeled_ratio,
        "split.seed": args.seed,
        "train.seed": args.seed,
        "train.warmup_epochs": args.epochs_warmup,
        "train.cluster_epochs": args.epochs_cluster,
        "train.tau": args.tau,
        "sinkhorn.epsilon": args.sinkhorn_eps,
        "sinkhorn.iterations": args.sinkhorn_iters,
        "train.ablation_no_sup_cluster": args.ablate_sup_cluster,
        "out": args.out,
    }


def _sweep_overrides(args: argparse.Namespace) -> dict[str, t.Any]:
    return {
        "data.synth": args.synth,
        "sweep.known_fractions": args.known_fractions,
        "sweep.seeds": args.seeds,
        "sweep.ablation": args.ablation,
        "train.warmup_epochs": args.epochs_warmup,
        "train.cluster_epochs": args.epochs_cluster,
        "out": args.out,
    }


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "run":
        return cmd_run(args.config, _run_overrides(args), manifest_path=args.manifest)
    if args.command == "sweep":
        return cmd_sweep(args.config, _sweep_overrides(args), workers=args.workers, baselines=args.baselines)
    if args.command == "assign":
        return cmd_assign(args.checkpoint, args.corpus, args.out)
    if args.command == "generate":
        return cmd_generate(args.preset, args.out, seed=args.seed, fmt=args.fmt)
    return cmd_info()


def main(argv: t.Sequence[str] | None = None) -> int:
    """Entry point of the `dcsc` command.

    Returns
    -------
    int
        The process exit code.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=args.log_level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )

    try:
        if (count := threads()) is not None:
            torch.set_num_threads(count)
        return _dispatch(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: error: {exc}\n")
        return 2
    except DCSCError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1

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
