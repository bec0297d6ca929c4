"""Behaviour spec files (JSON) and atomic output writes."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

from .measures import Behaviour, Measure, MeasureError

WEIGHT_TOL = 1e-9


class SpecError(ValueError):
    """Behaviour spec file cannot be parsed; message names the bad field."""


def _number(obj: dict, key: str, where: str) -> float:
    if key not in obj:
        raise SpecError(f"{where}: missing field {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SpecError(f"{where}.{key}: expected a finite number, got {v!r}")
    return float(v)


def _parse_cell(raw, where: str) -> Measure:
    if not isinstance(raw, list) or not raw:
        raise SpecError(f"{where}: expected a nonempty list of components")
    d, g = [], []
    for i, comp in enumerate(raw):
        here = f"{where}[{i}]"
        if not isinstance(comp, dict):
            raise SpecError(f"{here}: expected an object")
        kind = comp.get("kind")
        w, a, b = (_number(comp, k, here) for k in ("w", "a", "b"))
        if w < 0:
            raise SpecError(f"{here}.w: negative weight {w}")
        if kind == "dirac":
            d.append((w, a, b))
        elif kind == "gauss":
            s = _number(comp, "sigma", here)
            if s <= 0:
                raise SpecError(f"{here}.sigma: must be positive, got {s}")
            g.append((w, a, b, s))
        else:
            raise SpecError(f"{here}.kind: expected 'dirac' or 'gauss', got {kind!r}")
    total = sum(c[0] for c in d) + sum(c[0] for c in g)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise SpecError(f"{where}: weights sum to {total!r}, expected 1 within {WEIGHT_TOL}")
    try:
        return Measure([c[0] for c in d], [c[1] for c in d], [c[2] for c in d],
                       [c[0] for c in g], [c[1] for c in g], [c[2] for c in g],
                       [c[3] for c in g], tol=WEIGHT_TOL)
    except MeasureError as exc:
        raise SpecError(f"{where}: {exc}") from exc


def behaviour_from_dict(data) -> Behaviour:
    if not isinstance(data, dict) or "cells" not in data:
        raise SpecError("top level: expected an object with key 'cells'")
    cells = data["cells"]
    if not (isinstance(cells, list) and len(cells) == 2
            and all(isinstance(r, list) and len(r) == 2 for r in cells)):
        raise SpecError("cells: expected a 2x2 nested array")
    return Behaviour([[_parse_cell(cells[x][y], f"cells[{x}][{y}]") for y in (0, 1)]
                      for x in (0, 1)])


def behaviour_to_dict(bhv: Behaviour) -> dict:
    def cell(m: Measure):
        out = [{"kind": "dirac", "w": float(w), "a": float(a), "b": float(b)}
               for w, a, b in zip(m.dw, m.da, m.db)]
        out += [{"kind": "gauss", "w": float(w), "a": float(a), "b": float(b), "sigma": float(s)}
                for w, a, b, s in zip(m.gw, m.ga, m.gb, m.gs)]
        return out
    return {"cells": [[cell(bhv[x, y]) for y in (0, 1)] for x in (0, 1)]}


def load_behaviour(path) -> Behaviour:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return behaviour_from_dict(data)


def dumps_behaviour(bhv: Behaviour) -> str:
    # repr-exact floats keep reloads bit-identical
    return json.dumps(behaviour_to_dict(bhv), indent=1) + "\n"


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_behaviour(bhv: Behaviour, path) -> None:
    atomic_write(path, dumps_behaviour(bhv))
