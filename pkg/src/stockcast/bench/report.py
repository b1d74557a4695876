"""JSON and fixed-width text reports.

``report.json`` and ``report.txt`` depend only on the records and the config,
so identical runs give identical bytes. Wall-clock times go to a separate
``timings.json``.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict
from pathlib import Path

from .. import __version__
from .grid import DISPLAY, PARAM_NAME, SELECTION_NOTE, AverageRecord, RunRecord

_VOLATILE = ("wall_time",)


class ReportError(OSError):
    pass


def _record_dict(rec: RunRecord) -> dict:
    d = asdict(rec)
    for k in _VOLATILE:
        d.pop(k)
    if d["predictions"] is None:
        d.pop("predictions")
        d.pop("actual")
    return d


def render_json(records, averages, config_echo=None, metadata=None) -> str:
    doc = {
        "version": __version__,
        "config": config_echo or {},
        "metadata": {"selection": SELECTION_NOTE, "selection_on_test_set": True, **(metadata or {})},
        "records": [_record_dict(r) for r in records],
        "averages": [asdict(a) for a in averages],
    }
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _fmt(v, digits):
    return "-" if v is None else f"{v:.{digits}f}"


def render_text(records, averages) -> str:
    lines = []
    horizons = sorted({r.horizon for r in records})
    width = max(len(DISPLAY[r.model]) for r in records) + 2
    head = f"{'Prediction Models':<{width}}{'Parameter':>10}{'MAPE':>10}{'MAE':>12}{'R²':>9}"
    for h in horizons:
        rows = [r for r in records if r.horizon == h]
        title = f"{h}-Day ahead" if h == 1 else f"{h}-Days ahead"
        lines += [title, head]
        current = None
        for r in rows:
            pname = PARAM_NAME[r.model]
            if pname != current:
                lines.append(f"{'':<{width}}{pname:>10}")
                current = pname
            param = "-" if r.best_parameter is None else str(r.best_parameter)
            line = (
                f"{DISPLAY[r.model]:<{width}}{param:>10}{_fmt(r.mape, 2):>10}"
                f"{_fmt(r.mae, 2):>12}{_fmt(r.r2, 4):>9}"
            )
            if r.error:
                line += f"  ({r.error})"
            lines.append(line)
        lines.append("")
    if averages:
        lines += ["Average performance", f"{'Prediction Models':<{width}}{'MAPE':>10}{'MAE':>12}{'R²':>9}"]
        for a in averages:
            lines.append(f"{DISPLAY[a.model]:<{width}}{a.mape:>10.2f}{a.mae:>12.2f}{a.r2:>9.4f}")
        lines.append("")
    return "\n".join(lines)


def write_report(records, averages, path, config_echo=None, metadata=None) -> dict:
    """Write ``report.json``, ``report.txt`` and ``timings.json`` under directory ``path``."""
    if not records:
        raise ValueError("no records to report")
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"{out} is not writable")
        files = {
            "json": out / "report.json",
            "text": out / "report.txt",
            "timings": out / "timings.json",
        }
        files["json"].write_text(render_json(records, averages, config_echo, metadata), encoding="utf-8")
        files["text"].write_text(render_text(records, averages), encoding="utf-8")
        timings = [
            {"model": r.model, "horizon": r.horizon, "wall_time": r.wall_time} for r in records
        ]
        files["timings"].write_text(json.dumps(timings, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ReportError(f"cannot write report to {out}: {exc}") from exc
    return files


def read_report(path):
    """Load ``report.json`` (file or directory) back into records and averages."""
    p = Path(path)
    if p.is_dir():
        p = p / "report.json"
    doc = json.loads(p.read_text(encoding="utf-8"))
    records = [RunRecord(**r) for r in doc["records"]]
    averages = [AverageRecord(**a) for a in doc["averages"]]
    return records, averages, doc
