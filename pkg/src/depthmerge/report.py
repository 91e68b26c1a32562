"""Run reports: per-frame rows, aggregates, delimited output, and figures."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np

from .core import AUXILIARY, PRIMARY
from .pipeline import Engine, predicted_speedup

ROW_COLUMNS = ("frame", "primary_retained", "primary_rho", "aux_retained",
               "aux_rho", "total_retained", "merges", "aux_mode", "phase",
               "events")


@dataclass
class RunReport:
    rows: List[dict]
    aggregates: dict
    config: dict

    def row_tuples(self):
        return [tuple(row[c] for c in ROW_COLUMNS) for row in self.rows]


def run_trace(config, header, frames):
    """Step the engine over a whole trace and collect a RunReport."""
    engine = Engine(config, header.cameras, header.chunk_len)
    rows = []
    p_primary = header.cameras[PRIMARY].patch_count
    p_aux = (header.cameras[AUXILIARY].patch_count
             if AUXILIARY in header.cameras else 0)
    events_seen = 0
    for frame in frames:
        outputs = engine.step(frame)
        primary = outputs[PRIMARY]
        aux = outputs.get(AUXILIARY)
        new_events = engine.events[events_seen:]
        events_seen = len(engine.events)
        aux_retained = aux.stats["retained"] if aux else 0
        row = {
            "frame": frame.frame_index,
            "primary_retained": primary.stats["retained"],
            "primary_rho": primary.stats["rho"],
            "aux_retained": aux_retained,
            "aux_rho": aux.stats["rho"] if aux else 0.0,
            "total_retained": primary.stats["retained"] + aux_retained,
            "merges": (primary.stats.get("merges", 0)
                       + (aux.stats.get("merges", 0) if aux else 0)),
            "aux_mode": aux.stats.get("aux_mode", "-") if aux else "-",
            "phase": primary.stats.get("phase", "-"),
            "events": ";".join(f"{e.kind}[{e.detail}]" if e.detail else e.kind
                               for e in new_events) or "-",
        }
        rows.append(row)

    full_total = p_primary + p_aux
    retained = [r["total_retained"] for r in rows]
    aggregates = {
        "frames": len(rows),
        "mean_rho": (sum(retained) / (len(rows) * full_total)
                     if rows else 0.0),
        "steady_state_retained": rows[-1]["total_retained"] if rows else 0,
        "predicted_speedup": predicted_speedup(
            retained, [full_total] * len(rows)),
        "restore_events": sum(1 for e in engine.events
                              if e.kind == "restore"),
        "reinit_events": sum(1 for e in engine.events if e.kind == "reinit"),
        "aux_transitions": sum(1 for e in engine.events
                               if e.kind == "aux_transition"),
    }
    return RunReport(rows=rows, aggregates=aggregates,
                     config=config.as_dict())


def render_report(report):
    """Delimited text: one tab-separated row block plus an aggregate block."""
    lines = ["\t".join(ROW_COLUMNS)]
    for row in report.rows:
        cells = []
        for col in ROW_COLUMNS:
            value = row[col]
            if isinstance(value, float):
                cells.append(f"{value:.6f}")
            else:
                cells.append(str(value))
        lines.append("\t".join(cells))
    lines.append("")
    lines.append("# aggregates")
    for key, value in report.aggregates.items():
        if isinstance(value, float):
            lines.append(f"{key}={value:.6f}")
        else:
            lines.append(f"{key}={value}")
    lines.append("")
    lines.append("# config")
    for key, value in report.config.items():
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def write_report(report, path, figures=True):
    """Write the delimited report; render companion figures next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(report), encoding="utf-8")
    if figures:
        render_figures(report, path)


def render_figures(report, report_path):
    """Retention-over-time figures saved alongside the report file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    report_path = Path(report_path)
    stem = report_path.with_suffix("")
    frames = [r["frame"] for r in report.rows]

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(frames, [r["primary_retained"] for r in report.rows],
            label="primary", lw=1.5)
    ax.plot(frames, [r["aux_retained"] for r in report.rows],
            label="auxiliary", lw=1.5)
    ax.plot(frames, [r["total_retained"] for r in report.rows],
            label="total", lw=2.0, color="k")
    for row in report.rows:
        if row["events"] != "-":
            ax.axvline(row["frame"], color="r", alpha=0.2, lw=0.8)
    ax.set_xlabel("frame")
    ax.set_ylabel("retained tokens")
    ax.legend(loc="best")
    ax.set_title("token retention over time")
    fig.tight_layout()
    fig.savefig(f"{stem}_retention.png", dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(frames, [r["primary_rho"] for r in report.rows], label="primary")
    ax.plot(frames, [r["aux_rho"] for r in report.rows], label="auxiliary")
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("frame")
    ax.set_ylabel("retention ratio")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(f"{stem}_rho.png", dpi=120)
    plt.close(fig)


def recompute_aggregates(report, full_total):
    """Re-derive the aggregate block from the rows (consistency check)."""
    retained = [r["total_retained"] for r in report.rows]
    out = dict(report.aggregates)
    out["frames"] = len(report.rows)
    out["mean_rho"] = (sum(retained) / (len(retained) * full_total)
                       if retained else 0.0)
    out["steady_state_retained"] = retained[-1] if retained else 0
    out["predicted_speedup"] = predicted_speedup(
        retained, [full_total] * len(retained))
    for kind, key in (("restore", "restore_events"),
                      ("reinit", "reinit_events"),
                      ("aux_transition", "aux_transitions")):
        count = 0
        for row in report.rows:
            if row["events"] == "-":
                continue
            for token in row["events"].split(";"):
                if token == kind or token.startswith(f"{kind}["):
                    count += 1
        out[key] = count
    return out
