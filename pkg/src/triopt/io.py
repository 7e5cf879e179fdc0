"""CSV and JSON readers/writers for datasets, graphs and orders.

CSV files are headerless by default, comma separated, '.' decimal separator,
17 significant digits so that floats round-trip exactly. JSON is UTF-8 with
LF line endings.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DataParseError
from .stein_order import CausalOrder


def read_csv(path, header: bool = False) -> np.ndarray:
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, fields in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not fields or all(not f.strip() for f in fields):
                continue
            row_idx = len(rows)
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise DataParseError(
                    f"{path}: row {row_idx} (line {lineno}) has {len(fields)} fields, expected {width}",
                    row=row_idx,
                )
            try:
                vals = [float(f) for f in fields]
            except ValueError:
                raise DataParseError(f"{path}: row {row_idx} (line {lineno}) has a non-numeric cell", row=row_idx) from None
            if not all(math.isfinite(v) for v in vals):
                raise DataParseError(f"{path}: row {row_idx} (line {lineno}) has a non-finite value", row=row_idx)
            rows.append(vals)
    if not rows:
        raise DataParseError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def write_csv(path, M: np.ndarray, header: list[str] | None = None) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        np.savetxt(fh, M, fmt="%.17g", delimiter=",")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")


def graph_to_json(B: np.ndarray, order) -> dict:
    """``{"edges": [{"from": j, "to": i, "w": B[j, i]}, ...], "order": [...]}``."""
    src, dst = np.nonzero(B)
    perm = order.tolist() if isinstance(order, CausalOrder) else [int(x) for x in order]
    return {
        "edges": [{"from": int(j), "to": int(i), "w": float(B[j, i])} for j, i in zip(src, dst)],
        "order": perm,
    }


def graph_from_json(obj: dict) -> tuple[np.ndarray, np.ndarray]:
    order = np.asarray(obj["order"], dtype=int)
    d = len(order)
    B = np.zeros((d, d))
    for e in obj["edges"]:
        B[int(e["from"]), int(e["to"])] = float(e["w"])
    return B, order


def read_order(path) -> CausalOrder:
    """Read an order from a JSON array or an object with an ``order`` key."""
    obj = read_json(path)
    if isinstance(obj, dict):
        obj = obj["order"]
    return CausalOrder(np.asarray(obj, dtype=int))


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
