"""Benchmark problem suite and the JSON problem-config loader.

Config schema ``ttts-problem/1``::

    {"schema": "ttts-problem/1", "problem": "<registered name>",
     "params": { ... builder keyword overrides ... }}

Builders and their parameters are documented in the package README.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Callable

from ..errors import ConfigError
from .base import Problem
from .basis import BasisEncoding, radial_matrix
from .toy import build_f1, build_f2, f1, f2, f2_batch
from .arm import (
    PlanarArm,
    build_ik_planar,
    build_mp_planar,
    fk_planar,
    ik_cost,
    joint_points,
    mp_cost,
    mp_cost_batch,
    segment_circle_hits,
)
from .pushing import (
    PushState,
    build_push_planar,
    contact_point,
    face_switches,
    push_cost,
    push_step,
    rollout_batch,
    wrap_angle,
)

PROBLEM_SCHEMA = "ttts-problem/1"

REGISTRY: dict[str, Callable[..., Problem]] = {
    "f1": build_f1,
    "f2": build_f2,
    "ik_planar": build_ik_planar,
    "mp_planar": build_mp_planar,
    "push_planar": build_push_planar,
}


def build_problem(name: str, params: dict | None = None) -> Problem:
    if name not in REGISTRY:
        raise ConfigError(f"unknown problem {name!r}; registered: {sorted(REGISTRY)}")
    try:
        return REGISTRY[name](**(params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for problem {name!r}: {exc}") from exc


def load_problem(source: str | Path | dict) -> tuple[Problem, dict]:
    """Build a problem from a config dict or a JSON file path.

    Returns the problem and the fully resolved config (schema, name,
    params) for embedding into result files.
    """
    if isinstance(source, (str, Path)):
        try:
            data = json.loads(Path(source).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"problem config not found: {source}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"problem config is not valid JSON: {exc}") from exc
    else:
        data = dict(source)
    if data.get("schema") != PROBLEM_SCHEMA:
        raise ConfigError(
            f"unsupported problem schema {data.get('schema')!r}; expected {PROBLEM_SCHEMA}"
        )
    name = data.get("problem")
    if not isinstance(name, str):
        raise ConfigError("problem config needs a 'problem' name")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'params' must be an object")
    problem = build_problem(name, params)
    resolved = {"schema": PROBLEM_SCHEMA, "problem": name, "params": params}
    return problem, resolved


__all__ = [
    "Problem",
    "BasisEncoding",
    "PlanarArm",
    "PushState",
    "PROBLEM_SCHEMA",
    "REGISTRY",
    "build_problem",
    "load_problem",
    "build_f1",
    "build_f2",
    "build_ik_planar",
    "build_mp_planar",
    "build_push_planar",
    "f1",
    "f2",
    "f2_batch",
    "fk_planar",
    "ik_cost",
    "mp_cost",
    "mp_cost_batch",
    "joint_points",
    "segment_circle_hits",
    "push_step",
    "push_cost",
    "contact_point",
    "rollout_batch",
    "face_switches",
    "wrap_angle",
    "radial_matrix",
]
