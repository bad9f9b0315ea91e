"""JSON instance and schedule files.

Instance files carry the top-level keys ``shape``, ``mu``, ``populations``
and ``priorities`` (``null`` when absent); schedule files carry ``shape`` and
``schedule``. Matrices are row-major lists of rows; float values are written
with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from .model import Instance, ModelError, SchedulingMatrix, SystemShape, validate_schedule

PathLike = Union[str, Path]


class ParseError(ModelError):
    def __init__(self, path, message: str, line=None):
        where = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(f"{where}: {message}")
        self.path, self.line = path, line


def _shape_dict(shape: SystemShape) -> dict:
    return {"num_gp": shape.num_gp, "num_sa": shape.num_sa}


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def instance_to_dict(inst: Instance) -> dict:
    return {
        "shape": _shape_dict(inst.shape),
        "mu": inst.mu.tolist(),
        "populations": list(inst.populations),
        "priorities": None if inst.priorities is None else list(inst.priorities),
    }


def instance_from_dict(d: dict) -> Instance:
    s = d["shape"]
    return Instance.build(s["num_gp"], s["num_sa"], d["mu"], d["populations"],
                          d.get("priorities"), warn=False)


def dumps_instance(inst: Instance) -> str:
    return _dump(instance_to_dict(inst))


def schedule_to_dict(shape: SystemShape, N: SchedulingMatrix) -> dict:
    return {"shape": _shape_dict(shape), "schedule": N.tolist()}


def dumps_schedule(shape: SystemShape, N: SchedulingMatrix) -> str:
    return _dump(schedule_to_dict(shape, N))


def _load(path: PathLike) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(path, exc.strerror or str(exc)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.msg, exc.lineno) from exc


def load_instance(path: PathLike) -> Instance:
    d = _load(path)
    try:
        return instance_from_dict(d)
    except KeyError as exc:
        raise ParseError(path, f"missing key {exc.args[0]!r}") from exc
    except ModelError:
        raise
    except (TypeError, ValueError) as exc:
        raise ParseError(path, str(exc)) from exc


def save_instance(inst: Instance, path: PathLike) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8", newline="\n")


def load_schedule(path: PathLike, inst: Instance) -> SchedulingMatrix:
    d = _load(path)
    try:
        return validate_schedule(d["schedule"], inst)
    except KeyError as exc:
        raise ParseError(path, f"missing key {exc.args[0]!r}") from exc
    except ModelError:
        raise
    except (TypeError, ValueError) as exc:
        raise ParseError(path, str(exc)) from exc


def save_schedule(shape: SystemShape, N: SchedulingMatrix, path: PathLike) -> None:
    Path(path).write_text(dumps_schedule(shape, N), encoding="utf-8", newline="\n")
