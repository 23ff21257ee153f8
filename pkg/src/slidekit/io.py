"""Design files and small CSV/JSON helpers.

A design is stored as two sibling files:

``<name>.csv``
    Header row of factor names, then one row of symbolic level labels per run.
``<name>.json``
    ``{"runs": n, "factors": [...], "sliding": [...]}`` with factor specs and
    sliding tables.  Floats are written with ``repr`` so a save/load round
    trip is bit-identical.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .design import FactorSpec, PlanningMatrix, SlidingDesign, SlidingSpec, build_welding_fixture, resolve_settings
from .errors import ParseError, ValidationError

FIXTURES = {"welding": build_welding_fixture}


def _paths(path) -> tuple[Path, Path]:
    p = Path(path)
    stem = p.with_suffix("") if p.suffix.lower() in (".csv", ".json") else p
    return stem.with_suffix(".csv"), stem.with_suffix(".json")


def dumps_json(obj) -> str:
    """Stable, diff-friendly JSON text (sorted keys, two-space indent, LF)."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def loads_json(text: str, path=None):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path, exc.lineno, exc.colno) from exc


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    return loads_json(text, path)


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def design_metadata(design: SlidingDesign) -> dict:
    return {
        "runs": design.runs,
        "factors": [
            {
                "name": f.name,
                "kind": f.kind,
                "role": f.role,
                "levels": list(f.levels),
                "settings": None if f.settings is None else list(f.settings),
                "parent": f.parent,
                "unit": f.unit,
            }
            for f in design.factors
        ],
        "sliding": [
            {
                "parent": s.parent,
                "slid": s.slid,
                "table": {k: list(v) for k, v in s.table.items()},
                "center": None if s.center is None else list(s.center),
                "half_width": s.half_width,
            }
            for s in design.sliding
        ],
    }


def planning_csv(design: SlidingDesign) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = design.planning.names
    w.writerow(names)
    for i in range(design.runs):
        w.writerow([design.planning.columns[n][i] for n in names])
    return buf.getvalue()


def save_design(design: SlidingDesign, path) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.json``; returns both paths."""
    csv_path, json_path = _paths(path)
    write_text(csv_path, planning_csv(design))
    write_text(json_path, dumps_json(design_metadata(design)))
    return csv_path, json_path


def parse_planning_csv(text: str, path=None) -> PlanningMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise ParseError("missing header row", path, 1, 1)
    header = [h.strip() for h in rows[0]]
    seen = {}
    for col, name in enumerate(header, start=1):
        if not name:
            raise ParseError("empty factor name in header", path, 1, col)
        if name in seen:
            raise ParseError(f"duplicate factor column {name!r} (first at column {seen[name]})", path, 1, col)
        seen[name] = col
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, found {len(row)}", path, lineno, min(len(row), len(header)) + 1
            )
        for col, cell in enumerate(row, start=1):
            if not cell.strip():
                raise ParseError("empty level label", path, lineno, col)
        body.append([c.strip() for c in row])
    return PlanningMatrix.from_rows(header, body)


def design_from_metadata(planning: PlanningMatrix, meta: dict, path=None) -> SlidingDesign:
    if not isinstance(meta, dict):
        raise ValidationError(f"{path}: metadata must be a JSON object")
    runs = meta.get("runs")
    if runs is not None and int(runs) != planning.runs:
        raise ValidationError(f"{path}: metadata declares {runs} runs but the planning CSV has {planning.runs}")
    try:
        factors = [
            FactorSpec(
                name=f["name"],
                kind=f["kind"],
                role=f.get("role", "free"),
                levels=tuple(f["levels"]),
                settings=None if f.get("settings") is None else tuple(f["settings"]),
                parent=f.get("parent"),
                unit=f.get("unit"),
            )
            for f in meta["factors"]
        ]
        sliding = [
            SlidingSpec(
                parent=s["parent"],
                slid=s["slid"],
                table={k: tuple(v) for k, v in s["table"].items()},
                center=None if s.get("center") is None else tuple(s["center"]),
                half_width=s.get("half_width"),
            )
            for s in meta.get("sliding", [])
        ]
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValidationError(f"{path}: malformed design metadata ({exc!r})") from exc
    return resolve_settings(planning, factors, sliding)


def load_design(path) -> SlidingDesign:
    """Load a design saved by :func:`save_design`, or a bundled fixture by name."""
    if str(path) in FIXTURES:
        return FIXTURES[str(path)]()
    csv_path, json_path = _paths(path)
    try:
        text = csv_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {csv_path}: {exc.strerror}") from exc
    planning = parse_planning_csv(text, csv_path)
    return design_from_metadata(planning, read_json(json_path), json_path)


def read_response(path, column: str | None = None) -> np.ndarray:
    """Read one numeric column (with header) from a CSV file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty response file", path, 1, 1)
    header = [h.strip() for h in rows[0]]
    if column is None:
        col = 0
    elif column in header:
        col = header.index(column)
    else:
        raise ParseError(f"no column {column!r} in header {header}", path, 1, 1)
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            values.append(float(row[col]))
        except (IndexError, ValueError):
            raise ParseError("expected a number", path, lineno, col + 1) from None
    return np.asarray(values)


def matrix_csv(terms, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(terms)
    for row in np.asarray(values):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
