"""JSON file helpers. Output is deterministic: sorted keys, fixed indentation."""

from __future__ import annotations

import json
from pathlib import Path

from .qseries import EvalConfig, ProblemInstance, validate_config, validate_instance


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def load_instance(path, pipeline: str | None = None) -> ProblemInstance:
    return validate_instance(read_json(path), pipeline)


def load_config(path, inst: ProblemInstance) -> EvalConfig:
    return validate_config(inst, read_json(path))
