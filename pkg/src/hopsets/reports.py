"""Canonical JSON reports: sorted keys, no timestamps, every report echoes its config."""
from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from . import __version__


def jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    return x


def make_report(command: str, config: dict, seed: int | None, result: dict) -> dict:
    return {"version": __version__, "command": command, "config": config, "seed": seed, "result": result}


def canonical(report: dict) -> str:
    """Byte-stable text; keys named 'timing' are volatile and dropped."""
    return json.dumps(_strip(jsonable(report)), sort_keys=True, indent=2) + "\n"


def _strip(x):
    if isinstance(x, dict):
        return {k: _strip(v) for k, v in x.items() if k != "timing"}
    if isinstance(x, list):
        return [_strip(v) for v in x]
    return x
