"""Particle solvers and verification experiments for mean-field jump control problems."""

from __future__ import annotations

import json
import os
from typing import Any, Mapping

from . import _core
from ._core import SCHEMA_VERSION, __version__, builtin_models, set_worker_count, simulate, worker_count

__all__ = [
    "ConfigError",
    "SCHEMA_VERSION",
    "__version__",
    "builtin_models",
    "run",
    "set_worker_count",
    "simulate",
    "validate",
    "worker_count",
]


class ConfigError(ValueError):
    """Invalid experiment config. `code` is one of parse_error, schema_error,
    unknown_experiment, model_error, io_error."""

    def __init__(self, message: str, code: str):
        super().__init__(f"{code}: {message}")
        self.code = code


def _text(config: str | os.PathLike | Mapping[str, Any]) -> str:
    if isinstance(config, Mapping):
        return json.dumps(config)
    try:
        with open(config, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {config}: {exc.strerror}", "io_error") from None


def _translate(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except _core.ConfigError as exc:
        message, code = exc.args
        raise ConfigError(message, code) from None


def validate(config, *, seed=None, particles=None, steps=None) -> dict:
    """Parse a config (path or dict) and return it with every default filled in."""
    return _translate(_core.validate_text, _text(config), seed=seed, particles=particles, steps=steps)


def run(config, *, output_dir=None, seed=None, particles=None, steps=None) -> dict:
    """Run an experiment. Returns {"report", "pass", "wall_clock_seconds"} and,
    when output_dir is given, the written "manifest"."""
    out = None if output_dir is None else os.fspath(output_dir)
    return _translate(_core.run_text, _text(config), output_dir=out, seed=seed, particles=particles, steps=steps)
