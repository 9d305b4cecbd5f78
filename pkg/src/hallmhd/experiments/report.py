"""Experiment reports: verdicts against declared tolerances, JSON and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

CSV_HEADER = "# hmhd-series v1"
DEFAULT_PAIRS = ((2.0, 2.0), (2.0, 3.0), (3.0, 6.0))


def admissibility(p, q):
    """Which index conditions (p, q) satisfies: global (2.1-type) and local (2.3-type)."""
    gap = 1.0 / q - 1.0 / p
    ordered = 1.0 <= p <= q < math.inf
    return {
        "global": bool(ordered and gap >= -min(1.0 / 3.0, 1.0 / (2.0 * p)) - 1e-15),
        "local": bool(gap > -1.0 / 3.0),
    }


def _plain(x):
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return {k: _plain(v) for k, v in dataclasses.asdict(x).items()}
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def config_hash(cfg):
    blob = json.dumps(_plain(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Verdict:
    name: str
    passed: bool
    value: float
    tolerance: float
    relation: str  # how value is compared with tolerance, e.g. "<=" or "in"
    note: str = ""


@dataclass
class ExperimentReport:
    name: str
    config: dict
    series: dict = field(default_factory=dict)  # name -> (times, values)
    scalars: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    status: str = "ok"  # ok | inconclusive | diverged | hypothesis-not-met

    def check(self, name, value, tolerance, relation="<=", note=""):
        value = float(value)
        if relation == "<=":
            ok = value <= tolerance
        elif relation == "<":
            ok = value < tolerance
        elif relation == ">=":
            ok = value >= tolerance
        elif relation == "in":
            lo, hi = tolerance
            ok = lo <= value <= hi
        else:
            raise ValueError(f"unknown relation {relation!r}")
        self.verdicts.append(Verdict(name, bool(ok), value, tolerance, relation, note))
        return ok

    def add_series(self, name, times, values):
        self.series[name] = (list(map(float, times)), list(map(float, values)))

    @property
    def passed(self):
        return self.status in ("ok",) and all(v.passed for v in self.verdicts)

    def to_dict(self):
        return {
            "name": self.name,
            "config": _plain(self.config),
            "config_hash": config_hash(self.config),
            "scalars": _plain(self.scalars),
            "verdicts": _plain(self.verdicts),
            "status": self.status,
            "passed": self.passed,
        }

    def summary(self):
        lines = [f"{self.name}: {'PASS' if self.passed else 'FAIL'} ({self.status})"]
        for v in self.verdicts:
            lines.append(f"  [{'ok' if v.passed else 'x '}] {v.name}: {v.value:.6g} {v.relation} {v.tolerance}")
        return "\n".join(lines)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_report(report, out_dir, timestamp=None):
    """Write ``<name>.json`` and ``<name>.csv``; the timestamp lives in its own key."""
    payload = {"report": report.to_dict(), "timestamp": timestamp or datetime.now(timezone.utc).isoformat()}
    jpath = os.path.join(out_dir, f"{report.name}.json")
    _atomic_write(jpath, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    cpath = os.path.join(out_dir, f"{report.name}.csv")
    _atomic_write(cpath, series_csv(report.series))
    return jpath, cpath


def series_csv(series):
    lines = [CSV_HEADER, "t,norm_name,value"]
    for name in sorted(series):
        times, values = series[name]
        for t, v in zip(times, values):
            lines.append(f"{t!r},{name},{v!r}")
    return "\n".join(lines) + "\n"


def read_series_csv(path):
    """Parse a versioned series CSV into ``{name: (times, values)}``."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != CSV_HEADER:
            raise ValueError(f"unsupported series file header {first!r}")
        out = {}
        for row in csv.DictReader(fh):
            t, v = out.setdefault(row["norm_name"], ([], []))
            t.append(float(row["t"]))
            v.append(float(row["value"]))
    return out
