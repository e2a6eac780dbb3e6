"""Semi-supervised deep clustering of intents.

A small trainable encoder is warmed up with supervised and unsupervised contrastive objectives,
then trained against balanced Sinkhorn pseudo-assignments with a cluster head whose known-intent
rows double as the classifier. Evaluation follows the known-intent split protocol and reports
ACC, ARI and NMI.
"""

from dcsc import assignment, data
from dcsc.abc import HookResult, with_hook
from dcsc.assignment import (
    HardAssignment,
    PrototypeBank,
    SoftAssignment,
    align_and_extract,
    harden,
    hungarian,
    kmeans_pp,
    sinkhorn_assign,
)
from dcsc.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from dcsc.config import RunConfig, SinkhornConfig, SweepConfig, TrainConfig
from dcsc.data import BatchSchedule, Corpus, Sample, SplitResult, SplitSpec, load_corpus, save_corpus, split_corpus
from dcsc.encoder import Encoder, EncoderConfig, ViewPair, backward, encode, forward_two_views, mean_pool
from dcsc.errors import (
    CheckpointError,
    ConfigError,
    DCSCError,
    DataMismatchError,
    InsufficientDataError,
    MalformedCorpusError,
    TrainingDivergedError,
)
from dcsc.events import (
    EpochCompletedEvent,
    StageCompletedEvent,
    StageStartedEvent,
    StepCompletedEvent,
    TrainingEvent,
)
from dcsc.internal.about import __author__, __author_email__, __license__, __maintainer__, __url__, __version__
from dcsc.losses import (
    LossOutput,
    compose,
    cross_entropy,
    pseudo_supervised_contrastive,
    supervised_contrastive,
    swapped_cross_entropy,
    unsupervised_contrastive,
)
from dcsc.manifest import RunManifest
from dcsc.metrics import ContingencyTable, MetricReport, ari, clustering_accuracy, nmi
from dcsc.pipeline import run_experiment
from dcsc.rng import SeedStreams
from dcsc.synth import BlobSpec, generate
from dcsc.trainer import (
    Evaluation,
    Trainer,
    TrainState,
    clustering_stage,
    evaluate,
    init_cluster_head,
    warmup_stage,
)

__all__ = (
    "__version__",
    "__author__",
    "__author_email__",
    "__license__",
    "__maintainer__",
    "__url__",
    "assignment",
    "data",
    "HookResult",
    "with_hook",
    "SoftAssignment",
    "HardAssignment",
    "PrototypeBank",
    "sinkhorn_assign",
    "harden",
    "hungarian",
    "kmeans_pp",
    "align_and_extract",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "RunConfig",
    "TrainConfig",
    "SinkhornConfig",
    "SweepConfig",
    "Sample",
    "Corpus",
    "SplitSpec",
    "SplitResult",
    "BatchSchedule",
    "split_corpus",
    "load_corpus",
    "save_corpus",
    "Encoder",
    "EncoderConfig",
    "ViewPair",
    "mean_pool",
    "forward_two_views",
    "backward",
    "encode",
    "TrainingEvent",
    "StageStartedEvent",
    "StepCompletedEvent",
    "EpochCompletedEvent",
    "StageCompletedEvent",
    "LossOutput",
    "cross_entropy",
    "supervised_contrastive",
    "unsupervised_contrastive",
    "swapped_cross_entropy",
    "pseudo_supervised_contrastive",
    "compose",
    "RunManifest",
    "ContingencyTable",
    "MetricReport",
    "clustering_accuracy",
    "ari",
    "nmi",
    "run_experiment",
    "SeedStreams",
    "BlobSpec",
    "generate",
    "Trainer",
    "TrainState",
    "Evaluation",
    "warmup_stage",
    "init_cluster_head",
    "clustering_stage",
    "evaluate",
    "DCSCError",
    "ConfigError",
    "DataMismatchError",
    "MalformedCorpusError",
    "InsufficientDataError",
    "TrainingDivergedError",
    "CheckpointError",
)

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
