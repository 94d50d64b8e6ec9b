"""RMSE scoring, the mean-prediction baseline and per-subject reports."""

from dataclasses import dataclass
import csv
import math
from xml.sax.saxutils import escape

import numpy as np

from .errors import ShapeError, UsageError
from .nn.tensor import Tensor

REPORT_FIELDS = ("subject", "direction", "model_rmse", "baseline_rmse",
                 "model_rmse_raw", "baseline_rmse_raw")


def _values(x):
    return np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)


def rmse(pred, truth):
    """Root of the mean squared difference over every element."""
    p, t = _values(pred), _values(truth)
    if p.shape != t.shape:
        raise ShapeError(f"rmse: prediction {p.shape} vs truth {t.shape}")
    if p.size == 0:
        raise UsageError("rmse of an empty set")
    d = p - t
    return float(np.sqrt(np.mean(d * d)))


def mean_baseline(train_truth, test_truth):
    """RMSE of predicting the training mean item (frame or feature vector) everywhere.

    The mean is taken over every axis except the trailing item axes, which
    for both (N, T, H, W) frames and (N, T, D) features means over N and T.
    """
    tr, te = _values(train_truth), _values(test_truth)
    if tr.size == 0 or te.size == 0:
        raise UsageError("mean baseline needs non-empty train and test sets")
    item = tr.shape[2:] if tr.ndim >= 3 else tr.shape[1:]
    if te.shape[te.ndim - len(item):] != item:
        raise ShapeError(f"train items {item} vs test shape {te.shape}")
    mean = tr.reshape((-1,) + item).mean(axis=0)
    return rmse(np.broadcast_to(mean, te.shape), te)


@dataclass
class SubjectResult:
    subject: str
    direction: str
    model_rmse: float
    baseline_rmse: float
    model_rmse_raw: float = float("nan")     # v2e only: unstandardised reduced space
    baseline_rmse_raw: float = float("nan")

    def row(self):
        return [self.subject, self.direction] + [
            "" if math.isnan(v) else repr(float(v))
            for v in (self.model_rmse, self.baseline_rmse, self.model_rmse_raw, self.baseline_rmse_raw)]


def write_report(results, csv_path, svg_path=None):
    if not results:
        raise UsageError("report needs at least one subject result")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_FIELDS)
        for r in results:
            writer.writerow(r.row())
    if svg_path:
        with open(svg_path, "w") as fh:
            fh.write(bar_chart_svg(results))


def read_report(csv_path):
    out = []
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            nums = [float(row[k]) if row[k] else float("nan") for k in REPORT_FIELDS[2:]]
            out.append(SubjectResult(row["subject"], row["direction"], *nums))
    return out


def bar_chart_svg(results, width=640, height=360):
    """Grouped bars of test RMSE per subject, one panel per direction."""
    directions = sorted({r.direction for r in results})
    panel_w = width / max(len(directions), 1)
    top, bottom, left = 30, 40, 40
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    for k, direction in enumerate(directions):
        rows = [r for r in results if r.direction == direction]
        vmax = max(max(r.model_rmse, r.baseline_rmse) for r in rows) or 1.0
        x0 = k * panel_w + left
        span = panel_w - left - 10
        slot = span / len(rows)
        bar = slot * 0.35
        parts.append(f'<text x="{x0 + span / 2:.1f}" y="18" text-anchor="middle">'
                     f'{escape(direction)} test RMSE</text>')
        base_y = height - bottom
        parts.append(f'<line x1="{x0:.1f}" y1="{base_y}" x2="{x0 + span:.1f}" y2="{base_y}" stroke="black"/>')
        for i, r in enumerate(rows):
            for j, (val, colour) in enumerate(((r.model_rmse, "#3b6ea8"), (r.baseline_rmse, "#bbbbbb"))):
                h = (height - top - bottom) * val / vmax
                x = x0 + i * slot + j * bar + slot * 0.15
                parts.append(f'<rect x="{x:.1f}" y="{base_y - h:.1f}" width="{bar:.1f}" '
                             f'height="{h:.1f}" fill="{colour}"><title>{val:.3f}</title></rect>')
            parts.append(f'<text x="{x0 + i * slot + slot / 2:.1f}" y="{base_y + 14}" '
                         f'text-anchor="middle">{escape(r.subject)}</text>')
    parts.append(f'<text x="{left}" y="{height - 8}" fill="#3b6ea8">model</text>')
    parts.append(f'<text x="{left + 50}" y="{height - 8}" fill="#888888">mean baseline</text>')
    parts.append("</svg>\n")
    return "\n".join(parts)
