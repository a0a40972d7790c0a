"""CSV / JSON reports with a fixed column set and `#` metadata lines.

Numbers are written with ``repr`` so that two runs with the same seed give
byte-identical numeric columns; only the timestamp line differs.
"""

from __future__ import annotations

import csv
import io
import json
import math
import subprocess
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .harness.checks import FAIL, Row, to_rows

SCHEMA_VERSION = "1"
COLUMNS = ("check_name", "params", "lhs", "lhs_err", "rhs", "rhs_err", "verdict", "margin")
NUMERIC = ("lhs", "lhs_err", "rhs", "rhs_err", "margin")


def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).resolve().parent)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def fmt_number(x: float) -> str:
    return repr(float(x))


def fmt_params(params: dict) -> str:
    parts = []
    for k, v in params.items():
        parts.append(f"{k}={fmt_number(v) if isinstance(v, (int, float)) else v}")
    return ";".join(parts)


def _json_number(x: float):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


@dataclass
class Report:
    rows: list[Row]
    metadata: dict = field(default_factory=dict)

    @classmethod
    def build(cls, items, command: str, seed: int | None = None, count: int | None = None, **extra) -> "Report":
        meta = {"schema_version": SCHEMA_VERSION, "command": command, "seed": seed, "N": count}
        meta.update(extra)
        meta["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        meta["git_describe"] = git_describe()
        return cls(to_rows(items), meta)

    @property
    def failed(self) -> list[Row]:
        return [r for r in self.rows if r.verdict == FAIL]

    @property
    def exit_status(self) -> int:
        """Nonzero iff an asserted row failed; vacuous and report rows never count."""
        return 1 if self.failed else 0

    def _meta_lines(self) -> list[str]:
        return [f"# {k}: {v}" for k, v in self.metadata.items()]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self._meta_lines():
            buf.write(line + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([r.check_name, fmt_params(r.params), fmt_number(r.lhs), fmt_number(r.lhs_err),
                        fmt_number(r.rhs), fmt_number(r.rhs_err), r.verdict, fmt_number(r.margin)])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = []
        for r in self.rows:
            obj = {"check_name": r.check_name, "params": {k: _json_number(v) if isinstance(v, (int, float)) else v
                                                          for k, v in r.params.items()}}
            for c in ("lhs", "lhs_err", "rhs", "rhs_err"):
                obj[c] = _json_number(getattr(r, c))
            obj["verdict"] = r.verdict
            obj["margin"] = _json_number(r.margin)
            rows.append(obj)
        return json.dumps({"metadata": self.metadata, "rows": rows}, indent=1) + "\n"

    def render(self, fmt: str = "csv") -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")

    def write(self, path: str | Path | None, fmt: str = "csv") -> str:
        text = self.render(fmt)
        if path is not None and str(path) != "-":
            Path(path).write_text(text)
        return text


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """Parse a CSV report back into (metadata, rows as dicts of strings)."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))


def numeric_columns(text: str) -> list[tuple]:
    """check_name, params and the numeric columns of a CSV report (the determinism contract)."""
    _, rows = read_csv(text)
    return [(r["check_name"], r["params"]) + tuple(r[c] for c in NUMERIC) for r in rows]
