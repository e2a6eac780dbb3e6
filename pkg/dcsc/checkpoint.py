from __future__ import annotations

import json
import logging
import pathlib
import typing as t

import attr
import numpy as np
import torch
from torch import nn

from dcsc.assignment.prototypes import PrototypeBank
from dcsc.encoder import Encoder, EncoderConfig
from dcsc.errors import CheckpointError, DCSCError
from dcsc.internal.version import CURRENT_VERSION, Version

if t.TYPE_CHECKING:
    from dcsc.trainer import TrainState

__all__ = ("Checkpoint", "save_checkpoint", "load_checkpoint")

logger = logging.getLogger(__name__)

_HEADER_KEY: t.Final[str] = "__header__"
_ENCODER_PREFIX: t.Final[str] = "encoder/"


@attr.frozen(slots=True, eq=False)
class Checkpoint:
    """A trained encoder together with its head, as restored from disk."""

    encoder: Encoder
    known_intents: int
    num_intents: int
    intent_relabeling: dict[int, int]
    """Original intent id to training id; known intents occupy `[0, K)`."""
    prototypes: PrototypeBank | None = None
    classifier: torch.Tensor | None = None
    version: Version = CURRENT_VERSION

    @property
    def head(self) -> torch.Tensor:
        """Cluster logits weights: all prototypes if present, otherwise the warm-up classifier."""
        if self.prototypes is not None:
            return self.prototypes.weights
        return t.cast(torch.Tensor, self.classifier)


def save_checkpoint(
    path: str | pathlib.Path, state: TrainState, *, intent_relabeling: t.Mapping[int, int] | None = None
) -> pathlib.Path:
    """Write the encoder and the current head of `state` into a single `.npz` file.

    The archive holds every tensor under an explicit name plus a JSON header with the encoder
    configuration, `K`, `G`, the intent relabeling and the package version.

    Returns
    -------
    pathlib.Path
        The path written to.
    """
    path = pathlib.Path(path)
    header = {
        "version": str(CURRENT_VERSION),
        "encoder": attr.asdict(state.encoder.config, retain_collection_types=False),
        "known_intents": state.known_intents,
        "num_intents": state.num_intents,
        "intent_relabeling": {str(k): v for k, v in (intent_relabeling or {}).items()},
        "head": "prototypes" if state.prototypes is not None else "classifier",
    }

    arrays: dict[str, np.ndarray[t.Any, t.Any]] = {
        f"{_ENCODER_PREFIX}{name}": tensor.detach().numpy() for name, tensor in state.encoder.state_dict().items()
    }
    if state.prototypes is not None:
        arrays["prototypes"] = state.prototypes.numpy()
    else:
        arrays["classifier"] = state.head.detach().numpy()
    arrays[_HEADER_KEY] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)

    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fp:
        np.savez(fp, **arrays)
    logger.info(f"Wrote checkpoint to {path}.")
    return path


def load_checkpoint(path: str | pathlib.Path) -> Checkpoint:
    """Restore a checkpoint written by [`save_checkpoint`][dcsc.checkpoint.save_checkpoint].

    Raises
    ------
    CheckpointError
        If the file is missing or malformed, or was written by an incompatible version.
    """
    path = pathlib.Path(path)
    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {name: archive[name] for name in archive.files}
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"Cannot read checkpoint '{path}': {exc}") from exc

    if _HEADER_KEY not in arrays:
        raise CheckpointError(f"'{path}' is not a dcsc checkpoint: it has no header.")

    try:
        header = json.loads(arrays.pop(_HEADER_KEY).tobytes().decode())
        version = Version.from_str(header["version"])
        if not CURRENT_VERSION.is_compatible_with(version):
            raise CheckpointError(f"Checkpoint '{path}' was written by version {version}, this is {CURRENT_VERSION}.")

        encoder = Encoder(EncoderConfig(**header["encoder"]))
        state_dict = {
            name.removeprefix(_ENCODER_PREFIX): torch.from_numpy(array)
            for name, array in arrays.items()
            if name.startswith(_ENCODER_PREFIX)
        }
        encoder.load_state_dict(state_dict)
        encoder.eval()

        known, total = int(header["known_intents"]), int(header["num_intents"])
        relabeling = {int(k): int(v) for k, v in header["intent_relabeling"].items()}
        if header["head"] == "prototypes":
            return Checkpoint(
                encoder=encoder,
                known_intents=known,
                num_intents=total,
                intent_relabeling=relabeling,
                prototypes=PrototypeBank(arrays["prototypes"], known),
                version=version,
            )
        return Checkpoint(
            encoder=encoder,
            known_intents=known,
            num_intents=total,
            intent_relabeling=relabeling,
            classifier=nn.Parameter(torch.from_numpy(arrays["classifier"])),
            version=version,
        )
    except DCSCError as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"Checkpoint '{path}' holds an invalid configuration: {exc}") from exc
    except (KeyError, TypeError, ValueError, RuntimeError) as exc:
        raise CheckpointError(f"Checkpoint '{path}' is malformed: {exc}") from exc

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
