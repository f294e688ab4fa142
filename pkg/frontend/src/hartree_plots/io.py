"""Schema-checked loading of the simulator's CSV outputs."""

from __future__ import annotations

import csv

SCHEMAS = {
    "growth": ["t", "mass", "energy", "hs_norm", "e1", "e2", "lambda4"],
    "nsweep": ["N", "e2_t0", "e2_t1", "rel_increment"],
    "equivalence": ["N", "equiv_ratio"],
}


class SchemaError(ValueError):
    """CSV header does not match the declared figure kind."""


def load_table(kind: str, path: str) -> dict[str, list[float]]:
    """Read a CSV and return {column: values}; the header must match the
    kind's schema exactly (order included)."""
    if kind not in SCHEMAS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    expected = SCHEMAS[kind]
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {','.join(expected)}") from None
        if header != expected:
            missing = [c for c in expected if c not in header]
            extra = [c for c in header if c not in expected]
            detail = []
            if missing:
                detail.append(f"missing column(s): {', '.join(missing)}")
            if extra:
                detail.append(f"unexpected column(s): {', '.join(extra)}")
            if not detail:
                detail.append(f"column order must be {','.join(expected)}")
            raise SchemaError(f"{path}: {'; '.join(detail)}")
        columns: dict[str, list[float]] = {c: [] for c in expected}
        for row_no, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(expected):
                raise SchemaError(f"{path}:{row_no}: expected {len(expected)} fields, got {len(row)}")
            for name, raw in zip(expected, row):
                try:
                    columns[name].append(float(raw))
                except ValueError:
                    raise SchemaError(f"{path}:{row_no}: bad value {raw!r} in column {name}") from None
    return columns
