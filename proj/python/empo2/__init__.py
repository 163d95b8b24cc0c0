"""Python bindings for the empo2 trainer.

Thin wrappers over the C++ core: environments, training, evaluation,
adaptation, tip memory and the command-line front end.
"""

import json as _json

from ._core import (
    Environment,
    Error,
    FormatError,
    InvalidArgument,
    NonFiniteError,
    NoveltyStore,
    Observation,
    PolicyParams,
    Tip,
    TipMemory,
    Trainer,
    adapt,
    builtin_families,
    cli,
    embed,
    evaluate,
    group_advantages,
)


def _trainer_step(self):
    """Runs one iteration and returns its metrics record as a dict."""
    return _json.loads(self._step_json())


def _trainer_run(self, iterations):
    return [self.step() for _ in range(iterations)]


Trainer.step = _trainer_step
Trainer.run = _trainer_run

__all__ = [
    "Environment", "Error", "FormatError", "InvalidArgument", "NonFiniteError",
    "NoveltyStore", "Observation", "PolicyParams", "Tip", "TipMemory", "Trainer",
    "adapt", "builtin_families", "cli", "embed", "evaluate", "group_advantages",
]
