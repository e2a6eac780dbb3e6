from __future__ import annotations

import abc
import logging
import typing as t

if t.TYPE_CHECKING:
    import typing_extensions as te

    from dcsc.events import TrainingEvent
    from dcsc.internal.types import HookableT, HookT

__all__ = ("HookResult", "Hookable", "with_hook")

logger = logging.getLogger(__name__)


@t.final
class HookResult:
    """The result of a hook.

    Parameters
    ----------
    abort : bool
        Whether to stop training. The current epoch still runs to its end, and the
        remaining epochs of every stage are skipped.
    """

    __slots__: t.Sequence[str] = ("_abort",)

    def __init__(self, abort: bool = False) -> None:
        self._abort = abort

    @property
    def abort(self) -> bool:
        return self._abort


class Hookable(abc.ABC):
    """A trait for objects that report their progress to hooks."""

    __slots__: t.Sequence[str] = ()

    @property
    @abc.abstractmethod
    def hooks(self) -> t.MutableSequence[HookT]:
        """The hooks called with every event of this object."""

    def add_hook(self, hook: HookT) -> te.Self:
        """Add a new hook to this object.

        Any function that takes a [`TrainingEvent`][dcsc.events.TrainingEvent] as its sole parameter
        and returns either a [`HookResult`][dcsc.abc.hookable.HookResult] or `None` can be used as a hook.

        Parameters
        ----------
        hook : HookT
            The hook to add.

        Returns
        -------
        te.Self
            This object for chaining.
        """
        self.hooks.append(hook)
        return self

    def _dispatch(self, event: TrainingEvent) -> bool:
        """Call every hook with `event`. Returns whether any of them asked to abort.

        All hooks see the event even if an earlier one aborts.
        """
        abort = False
        for hook in self.hooks:
            result = hook(event)
            if isinstance(result, HookResult) and result.abort:
                logger.debug(f"Hook {hook!r} requested an abort on {type(event).__name__}.")
                abort = True
        return abort


def with_hook(hook: HookT) -> t.Callable[[HookableT], HookableT]:
    """Add a hook to a hookable object.

    Example
    --------
    ```py
    def stop_after_first_epoch(event: dcsc.TrainingEvent) -> dcsc.HookResult | None:
        if isinstance(event, dcsc.EpochCompletedEvent):
            return dcsc.HookResult(abort=True)

    trainer = dcsc.with_hook(stop_after_first_epoch)(dcsc.Trainer(config))
    ```
    """

    def decorator(hookable: HookableT) -> HookableT:
        hookable.hooks.append(hook)
        return hookable

    return decorator

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
