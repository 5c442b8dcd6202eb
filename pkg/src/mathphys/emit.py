"""Scenario results and their JSON / CSV serialisations."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError


def _clean(value):
    """Convert numpy scalars and arrays to plain Python numbers and lists."""
    if isinstance(value, (str, bool)) or value is None:
        return value
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            raise InvalidInputError("scenario outputs must be finite")
        return v
    if isinstance(value, (list, tuple, np.ndarray)):
        arr = np.asarray(value)
        if np.iscomplexobj(arr):
            raise InvalidInputError("complex outputs must be split into real and imaginary parts")
        return [_clean(v) for v in arr.tolist()]
    raise InvalidInputError(f"unsupported output type {type(value).__name__}")


@dataclass
class ScenarioResult:
    name: str
    inputs: dict
    outputs: dict = field(default_factory=dict)
    passed: Optional[bool] = None
    runtime_ms: int = 0
    columns: tuple = ()

    def __post_init__(self):
        if not self.name:
            raise InvalidInputError("scenario name must be nonempty")
        if self.runtime_ms < 0:
            raise InvalidInputError("runtime must be nonnegative")
        self.inputs = {str(k): str(v) for k, v in self.inputs.items()}
        self.outputs = {str(k): _clean(v) for k, v in self.outputs.items()}
        if not self.columns:
            self.columns = tuple(k for k, v in self.outputs.items() if isinstance(v, list))
        lengths = {len(self.outputs[c]) for c in self.columns}
        if len(lengths) > 1:
            raise InvalidInputError(f"table columns {self.columns} have different lengths")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "pass": self.passed,
            "runtime_ms": int(self.runtime_ms),
        }


def to_json(result: ScenarioResult) -> str:
    # json writes floats with repr, the shortest string that parses back to the same double
    return json.dumps(result.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def to_csv(result: ScenarioResult) -> str:
    """A table of the array outputs, or one row of the scalar outputs when there are none."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if result.columns:
        writer.writerow(result.columns)
        for row in zip(*(result.outputs[c] for c in result.columns)):
            writer.writerow([_fmt(v) for v in row])
    else:
        scalars = [k for k, v in result.outputs.items() if not isinstance(v, list)]
        writer.writerow(scalars)
        if scalars:
            writer.writerow([_fmt(result.outputs[k]) for k in scalars])
    return buf.getvalue()


def emit(result: ScenarioResult, format: str = "json", path: Optional[str] = None) -> str:
    """Serialise ``result``; write it to ``path`` when given and return the text."""
    if format not in ("json", "csv"):
        raise InvalidInputError(f"unknown format {format!r}")
    text = to_json(result) if format == "json" else to_csv(result)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def parse_json(text: str) -> ScenarioResult:
    data = json.loads(text)
    return ScenarioResult(data["name"], data["inputs"], data["outputs"], data["pass"], data["runtime_ms"])
