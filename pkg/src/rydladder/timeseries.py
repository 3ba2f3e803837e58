"""Time-series container with CSV + JSON sidecar serialisation."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TIME_COLUMN = "t_omega"


@dataclass
class TimeSeries:
    """Rows of ``(time, observable values)`` plus run metadata.

    Complex columns are written as ``<name>_re`` and ``<name>_im``.
    """

    times: np.ndarray
    columns: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    states: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        for k, v in list(self.columns.items()):
            v = np.asarray(v)
            if v.shape[0] != self.times.size:
                raise ValueError(f"column {k!r} has {v.shape[0]} rows, expected {self.times.size}")
            self.columns[k] = v

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __len__(self) -> int:
        return self.times.size

    def _flat_columns(self):
        out = {}
        for k, v in self.columns.items():
            if np.iscomplexobj(v):
                out[f"{k}_re"] = v.real
                out[f"{k}_im"] = v.imag
            else:
                out[k] = v
        return out

    def to_csv(self, path, sidecar: bool = True) -> Path:
        """Write the CSV and, unless disabled, ``<stem>.json`` metadata."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        flat = self._flat_columns()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([TIME_COLUMN, *flat.keys()])
            for r in range(self.times.size):
                w.writerow([repr(float(self.times[r]))] + [repr(float(v[r])) for v in flat.values()])
        if sidecar:
            with open(path.with_suffix(".json"), "w") as fh:
                json.dump(self.meta, fh, indent=2, sort_keys=True, default=_json_default)
        return path

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        path = Path(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
        cols = {h: body[:, k] for k, h in enumerate(header) if h != TIME_COLUMN}
        meta_path = path.with_suffix(".json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        return cls(body[:, header.index(TIME_COLUMN)], cols, meta)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not serialisable: {type(obj)}")
