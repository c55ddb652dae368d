"""Parsing and serialization: matrices, points, reports, CSV tables, SVG scatter."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .report import SCHEMA_VERSION, _jsonable
from .torus import IntegerMatrix, SystemDescriptor, TorusPoint


def parse_matrix(text: str) -> IntegerMatrix:
    """JSON array-of-arrays of integers, e.g. ``[[2,0],[0,2]]``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed matrix JSON: {text!r}") from exc
    if isinstance(data, list) and data and all(isinstance(v, int) for v in data) and len(data) == 1:
        data = [data]
    if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
        raise ValueError(f"malformed matrix JSON: {text!r}")
    return IntegerMatrix(data)


def parse_point(text: str | Sequence[str], circle: int | None = None) -> TorusPoint:
    """JSON array of decimal or ``"p/q"`` strings."""
    items = json.loads(text) if isinstance(text, str) else list(text)
    return TorusPoint.parse([str(v) for v in items], circle)


def parse_example(name: str) -> SystemDescriptor:
    """Named systems: ``two-circles``, ``circle-doubling``, ``circle-power:K``."""
    if name == "two-circles":
        return SystemDescriptor.two_circles()
    if name == "circle-doubling":
        return SystemDescriptor.circle_power(2)
    if name.startswith("circle-power"):
        _, _, k = name.partition(":")
        return SystemDescriptor.circle_power(int(k or 2))
    raise ValueError(f"unknown example system {name!r}")


def system_from_dict(data: dict) -> SystemDescriptor:
    if data["kind"] == "toral":
        return SystemDescriptor.toral(data["matrix"])
    if data["kind"] == "circle-power":
        return SystemDescriptor.circle_power(data["k"])
    return SystemDescriptor.two_circles()


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed separators, schema-tagged."""
    payload = _jsonable(obj)
    if isinstance(payload, dict) and "schema" not in payload:
        payload = {"schema": SCHEMA_VERSION, **payload}
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(header))
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_svg_scatter(path, points: np.ndarray, size: int = 400, radius: float = 1.2) -> Path:
    """Static scatter plot of the first two columns of ``points``."""
    pts = np.asarray(points, dtype=float)[:, :2]
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    pad = 10
    xy = pad + (pts - lo) / span * (size - 2 * pad)
    circles = "\n".join(f'<circle cx="{x:.2f}" cy="{size - y:.2f}" r="{radius}"/>' for x, y in xy)
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">\n'
        f'<rect width="{size}" height="{size}" fill="white"/>\n<g fill="black">\n{circles}\n</g>\n</svg>\n'
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg)
    return path
