"""Report rendering: canonical JSON, Markdown tables and SVG bar charts.

JSON output is canonical (sorted keys, shortest round-trip float repr, fixed
indentation) so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
from functools import singledispatch
from html import escape
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .audit import ConsistencyReport, TransferReport, performance_delta_summary
from .errors import AuditError
from .explain import AlignmentReport
from .importance import ImportanceVector
from .metrics import METRIC_NAMES, MetricSet

SVG_MAX_BARS = 15
_METRIC_LABELS = {
    "accuracy": "Accuracy",
    "balanced_accuracy": "BA",
    "f1": "F1",
    "precision": "Precision",
    "recall": "Recall",
    "mcc": "MCC",
}


class ReportWriteError(AuditError, OSError):
    pass


def _plain(obj: Any):
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_plain(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def to_json(report: Any) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# markdown


def _table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def _f(x: float, digits: int = 7) -> str:
    return f"{x:.{digits}f}"


def metric_table(columns: Mapping[str, MetricSet]) -> str:
    """Metrics as rows, one column per model, the layout of a classification-score table."""
    header = ["Metric", *columns]
    rows = [[_METRIC_LABELS[m], *(_f(ms[m]) for ms in columns.values())] for m in METRIC_NAMES]
    return _table(header, rows)


@singledispatch
def to_markdown(report) -> str:
    if isinstance(report, Mapping) and report and all(
            isinstance(v, MetricSet) for v in report.values()):
        return metric_table(report)
    raise TypeError(f"no Markdown renderer for {type(report).__name__}")


@to_markdown.register
def _(report: MetricSet) -> str:
    return metric_table({"Score": report})


@to_markdown.register
def _(report: ImportanceVector) -> str:
    rows = [[rank + 1, report.feature_names[i], f"{report.scores[i]:.6g}"]
            for rank, i in enumerate(report.ranking())]
    return f"### {report.method}\n\n" + _table(["Rank", "Feature", "Score"], rows)


def transfer_table(reports) -> str:
    rows = []
    for r in reports:
        src = r.source.source
        label = "/".join(str(src[k]) for k in ("model", "method") if k in src) or "forced"
        rows.append([label, ", ".join(r.source.features), _f(r.receiver_scores.accuracy),
                     _f(r.receiver_scores.mcc), "yes" if r.transferable else "no"])
    return _table(["Source", "Top features", "Mean accuracy", "Mean MCC", "Transferable"], rows)


@to_markdown.register
def _(report: TransferReport) -> str:
    return (f"### Cross-explanation ({report.repeats} receiver trainings, "
            f"MCC gate {report.threshold})\n\n" + transfer_table([report]))


@to_markdown.register
def _(report: ConsistencyReport) -> str:
    rows = []
    for i, run in enumerate(report.runs):
        delta = ", ".join(f"{k}={v}" for k, v in sorted(run.delta.items()))
        delta = delta or ("base" if i == 0 else "seed only")
        rows.append([i, delta, run.config.seed, ", ".join(run.top.features),
                     _f(run.metrics.accuracy), _f(run.metrics.mcc)])
    out = "### Runs\n\n" + _table(["Run", "Change", "Seed", "Top features", "Accuracy", "MCC"],
                                  rows)
    s = performance_delta_summary(report)
    out += "\n### Summary\n\n" + _table(["Quantity", "Value"], [
        ["Max delta, standard metrics", _f(s["standard_metrics_max_delta"])],
        ["Max delta, MCC", _f(s["mcc_max_delta"])],
        ["Mean pairwise Jaccard of top sets", _f(s["explanation_mean_jaccard"], 4)],
    ])
    return out


@to_markdown.register
def _(report: AlignmentReport) -> str:
    rows = []
    for name, v in report.variants.items():
        g = v.gradient.as_dict()
        rows.append([name, v.coefficient_top, v.gradient_top, f"{g['T']:.6g}", f"{g['H']:.6g}",
                     "yes" if v.agree else "no"])
    head = (f"### Coefficient vs gradient importance (c1={report.c1}, c2={report.c2}, "
            f"threshold={report.threshold})\n\n")
    return head + _table(["Variant", "Top by coefficient", "Top by gradient",
                          "mean abs dM/dT", "mean abs dM/dH", "Agree"], rows)


# ---------------------------------------------------------------------------
# svg


def importance_svg(v: ImportanceVector, max_bars: int = SVG_MAX_BARS, width: int = 640) -> str:
    """Horizontal bars for the ``max_bars`` largest |scores|, largest on top."""
    order = v.ranking()[:max_bars]
    bar_h, gap, label_w, top = 18, 6, 200, 30
    height = top + len(order) * (bar_h + gap) + 10
    span = width - label_w - 90
    peak = max((abs(v.scores[i]) for i in order), default=0.0) or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<text x="{width // 2}" y="18" text-anchor="middle" font-weight="bold">'
        f'{escape(v.method)}: top {len(order)} features</text>',
    ]
    for row, i in enumerate(order):
        y = top + row * (bar_h + gap)
        s = float(v.scores[i])
        w = abs(s) / peak * span
        colour = "#1f77b4" if s >= 0 else "#d62728"
        parts.append(f'<text x="{label_w - 6}" y="{y + 13}" text-anchor="end">'
                     f'{escape(v.feature_names[i])}</text>')
        parts.append(f'<rect class="bar" x="{label_w}" y="{y}" width="{w:.2f}" height="{bar_h}" '
                     f'fill="{colour}"/>')
        parts.append(f'<text x="{label_w + w + 4:.2f}" y="{y + 13}">{s:.4g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------


def emit_report(report: Any, fmt: str, out_dir, stem: str) -> Path:
    """Write ``report`` as ``<out_dir>/<stem>.<fmt>`` and return the path."""
    renderers = {"json": to_json, "markdown": to_markdown, "svg": importance_svg}
    suffix = {"json": ".json", "markdown": ".md", "svg": ".svg"}
    if fmt not in renderers:
        raise ValueError(f"unknown report format {fmt!r}")
    if fmt == "svg" and not isinstance(report, ImportanceVector):
        raise TypeError("SVG output is only defined for importance vectors")
    if "/" in stem or "\\" in stem or stem.startswith("."):
        raise ValueError(f"report name {stem!r} must be a plain file name")
    text = renderers[fmt](report)
    out_dir = Path(out_dir)
    path = out_dir / (stem + suffix[fmt])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ReportWriteError(f"cannot write {path}: {exc}") from exc
    return path
