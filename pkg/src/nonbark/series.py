"""Sampled weak-value series and their CSV / JSON file formats.

CSV layout::

    # nonbark weak-value series
    # coord_label: x
    # metadata: {"mode": ..., ...}
    coord,re_w,im_w,abs_w
    1.0000000000000000e+02,...

Numbers are written with 17 significant digits so that a file round-trips
bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HEADER = "coord,re_w,im_w,abs_w"
MAGIC = "# nonbark weak-value series"


def fmt(v):
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {v!r} cannot be serialized")
    return format(v, ".17g")


@dataclass
class WeakValueSeries:
    coord_label: str
    coords: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.coord_label not in ("x", "t"):
            raise ValueError("coord_label must be 'x' or 't'")
        c = np.asarray(self.coords, dtype=float).ravel()
        w = np.asarray(self.values, dtype=complex).ravel()
        if c.shape != w.shape:
            raise ValueError("coords and values differ in length")
        order = np.argsort(c, kind="stable")
        self.coords, self.values = c[order], w[order]
        self.metadata = dict(self.metadata)
        json.dumps(self.metadata)  # must be JSON-able

    def __len__(self):
        return self.coords.size

    @property
    def re(self):
        return self.values.real

    @property
    def im(self):
        return self.values.imag

    @property
    def abs(self):
        return np.abs(self.values)

    def peak(self):
        """(coord, |w|) at the largest magnitude."""
        if not len(self):
            raise ValueError("empty series")
        k = int(np.argmax(self.abs))
        return float(self.coords[k]), float(self.abs[k])

    def rows(self):
        for c, w in zip(self.coords, self.values):
            yield float(c), float(w.real), float(w.imag), float(abs(w))

    def same_as(self, other):
        return (
            self.coord_label == other.coord_label
            and self.metadata == other.metadata
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.values, other.values)
        )

    # CSV

    def to_csv(self):
        lines = [
            MAGIC,
            f"# coord_label: {self.coord_label}",
            "# metadata: " + json.dumps(self.metadata, sort_keys=True),
            HEADER,
        ]
        lines += [",".join(fmt(v) for v in row) for row in self.rows()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text):
        label, meta, data = "x", {}, []
        seen_header = False
        for line in text.splitlines():
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("coord_label:"):
                    label = body.split(":", 1)[1].strip()
                elif body.startswith("metadata:"):
                    meta = json.loads(body.split(":", 1)[1])
                continue
            if not line.strip():
                continue
            if not seen_header:
                if line.strip() != HEADER:
                    raise ValueError(f"unexpected CSV header {line!r}")
                seen_header = True
                continue
            c, re, im, _ = (float(s) for s in line.split(","))
            data.append((c, complex(re, im)))
        coords = np.array([d[0] for d in data], dtype=float)
        vals = np.array([d[1] for d in data], dtype=complex)
        return cls(label, coords, vals, meta)

    # JSON

    def to_json(self):
        rows = ",\n    ".join("[" + ", ".join(fmt(v) for v in row) + "]" for row in self.rows())
        body = "\n    " + rows + "\n  " if rows else ""
        return (
            "{\n"
            f'  "coord_label": {json.dumps(self.coord_label)},\n'
            f'  "columns": {json.dumps(HEADER.split(","))},\n'
            f'  "metadata": {json.dumps(self.metadata, sort_keys=True)},\n'
            f'  "samples": [{body}]\n'
            "}\n"
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        s = d["samples"]
        coords = np.array([r[0] for r in s], dtype=float)
        vals = np.array([complex(r[1], r[2]) for r in s], dtype=complex)
        return cls(d["coord_label"], coords, vals, d.get("metadata", {}))


def emit_series(series, path, fmt="csv"):
    """Write ``series`` to ``path`` (suffix added if missing) and return the Path."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    if path.suffix != "." + fmt:
        path = path.with_name(path.name + "." + fmt)
    text = series.to_csv() if fmt == "csv" else series.to_json()
    path.write_text(text, encoding="utf-8")
    return path


def read_series(path):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return WeakValueSeries.from_json(text)
    return WeakValueSeries.from_csv(text)
