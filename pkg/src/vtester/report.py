"""Report emission: report.json, report.csv and gnuplot-ready data files."""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

from .metrics.builtin import DIV_RULE, IFRAME_RATE_RULE
from .metrics.core import MeasureResult, Skip

REPORT_VERSION = 1
CSV_COLUMNS = ("measure", "name", "kind", "x", "y")


def load_schema() -> dict:
    return json.loads(resources.files("vtester").joinpath("data/report.schema.json").read_text())


def _plain(obj):
    """Coerce option values (dataclasses, tuples) into JSON-native structures."""
    if hasattr(obj, "as_dict"):
        return obj.as_dict()
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    return obj


def build_report(results, session_meta: dict | None = None, options: dict | None = None,
                 inputs: dict | None = None) -> dict:
    options = options or {}
    return {
        "version": REPORT_VERSION,
        "inputs": {k: str(v) for k, v in (inputs or {}).items() if v is not None},
        "session": _plain(session_meta or {}),
        "provenance": {
            "mos_table": _plain(options.get("mos_table")),
            "div_rule": DIV_RULE,
            "iframe_loss_rate_rule": IFRAME_RATE_RULE,
            "plr_denominator": "received packets",
            "pld_k": options.get("pld_k"),
            "g1070_coefficients": _plain(options.get("g1070")),
            "trace_note": "RTP packets captured at the application layer and stored as synthesized UDP/IPv4 frames",
        },
        "results": [r.to_dict() for r in results],
    }


def _slug(r) -> str:
    return f"{r.meter}_{r.name}" if r.meter else r.name


def write_csv(results, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in results:
            if isinstance(r, Skip):
                continue
            if r.kind == "value":
                w.writerow([r.meter, r.name, r.kind, "", repr(r.data)])
            else:
                for x, y in r.data:
                    w.writerow([r.meter, r.name, r.kind, repr(x), repr(y)])
    return path


def write_dat(result: MeasureResult, path) -> Path:
    path = Path(path)
    lines = [f"# {result.name} {result.units}"]
    lines += [f"{x!r} {y!r}" for x, y in result.data]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_reports(results, out_dir, session_meta=None, options=None, inputs=None) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = build_report(results, session_meta, options, inputs)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    write_csv(results, out / "report.csv")
    for r in results:
        if isinstance(r, MeasureResult) and r.kind != "value":
            write_dat(r, out / f"{_slug(r)}.dat")
    return report


def mos_percentages(hist) -> list[float]:
    counts = {int(b): c for b, c in hist}
    total = sum(counts.values())
    return [100.0 * counts.get(s, 0) / total if total else 0.0 for s in range(1, 6)]


def write_mos_bars(runs, path) -> Path:
    """Stacked-bar data: one row per run with the percentage of frames at MOS 1..5.

    ``runs`` is a sequence of ``(label, mos_hist, iframe_loss_rate_or_None)``.
    """
    path = Path(path)
    lines = ["# run mos1 mos2 mos3 mos4 mos5 iframe_loss_rate"]
    for label, hist, ilr in runs:
        pct = " ".join(f"{p:.6g}" for p in mos_percentages(hist))
        lines.append(f"{label} {pct} {'nan' if ilr is None else repr(float(ilr))}")
    path.write_text("\n".join(lines) + "\n")
    return path
