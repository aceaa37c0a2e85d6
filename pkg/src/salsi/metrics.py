"""Evaluation of detected salt bodies and boundaries against a reference.

Pixel metrics compare body masks on each inline.  Shape metrics compare the
boundary curves: ``salsim`` is a Fréchet-distance similarity in [0, 1] and
``curved`` combines the Fréchet distance with a curvature discrepancy.
Both shape metrics use forms defined by this package; see their docstrings.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.spatial.distance import cdist

from .morphology import BoundaryPolyline

__all__ = [
    "ConfusionCounts",
    "PixelMetrics",
    "InlineMetrics",
    "MetricsReport",
    "METRIC_NAMES",
    "confusion",
    "pixel_metrics",
    "frechet_distance",
    "salsim",
    "resample",
    "curvature_profile",
    "curved",
    "evaluate_inlines",
    "aggregate",
]

METRIC_NAMES = ("accuracy", "precision", "recall", "f_score", "salsim", "curved")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class PixelMetrics:
    accuracy: float
    precision: float | None
    recall: float | None
    f_score: float | None


@dataclass
class InlineMetrics:
    inline: int
    accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None
    f_score: float | None = None
    salsim: float | None = None
    curved: float | None = None


@dataclass
class MetricsReport:
    rows: list[InlineMetrics]
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "summary": self.summary}

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls([InlineMetrics(**r) for r in data["rows"]], data.get("summary", {}))

    def mean(self, name: str) -> float | None:
        return self.summary[name]["mean"]


def confusion(pred, ref) -> ConfusionCounts:
    pred = np.asarray(pred, dtype=bool)
    ref = np.asarray(ref, dtype=bool)
    if pred.shape != ref.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {ref.shape}")
    tp = int(np.count_nonzero(pred & ref))
    fp = int(np.count_nonzero(pred & ~ref))
    fn = int(np.count_nonzero(~pred & ref))
    return ConfusionCounts(tp, pred.size - tp - fp - fn, fp, fn)


def pixel_metrics(c: ConfusionCounts) -> PixelMetrics:
    """Accuracy, precision, recall and F-score.

    Precision is None without any predicted positives and recall is None
    without any reference positives; F-score is None if either is.
    """
    accuracy = (c.tp + c.tn) / c.total
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else None
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else None
    if precision is None or recall is None:
        f_score = None
    elif precision + recall == 0:
        f_score = 0.0
    else:
        f_score = 2 * precision * recall / (precision + recall)
    return PixelMetrics(accuracy, precision, recall, f_score)


def _points(p) -> np.ndarray:
    return np.asarray(getattr(p, "points", p), dtype=np.float64).reshape(-1, 2)


def frechet_distance(a, b) -> float:
    """Discrete Fréchet distance, evaluated one anti-diagonal at a time."""
    d = cdist(_points(a), _points(b))
    p, q = d.shape
    if p == 0 or q == 0:
        raise ValueError("polylines must not be empty")
    acc = np.full((p + 1, q + 1), np.inf)
    acc[0, 0] = 0.0
    for s in range(p + q - 1):
        i = np.arange(max(0, s - q + 1), min(s, p - 1) + 1)
        j = s - i
        best_prev = np.minimum(np.minimum(acc[i, j + 1], acc[i, j]), acc[i + 1, j])
        acc[i + 1, j + 1] = np.maximum(d[i, j], best_prev)
    return float(acc[p, q])


def salsim(a, b, slice_dims) -> float:
    """Similarity ``1 - d_F / D`` clamped to [0, 1].

    ``D`` is the distance between opposite corner voxels of an inline
    section of shape ``slice_dims = (m, n)``.
    """
    m, n = slice_dims
    diag = math.hypot(m - 1, n - 1)
    if diag == 0:
        raise ValueError("slice must span more than one voxel")
    return min(1.0, max(0.0, 1.0 - frechet_distance(a, b) / diag))


def resample(p, samples: int = 128) -> np.ndarray:
    """Points spaced evenly in arc length along ``p`` (closing edge included for closed curves)."""
    pts = _points(p)
    if getattr(p, "closed", False):
        pts = np.vstack([pts, pts[:1]])
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.linspace(0.0, s[-1], samples)
    return np.column_stack([np.interp(t, s, pts[:, 0]), np.interp(t, s, pts[:, 1])])


def curvature_profile(p, window: int = 5, closed: bool | None = None) -> np.ndarray:
    """Unsigned curvature (1/voxel) along a polyline.

    Coordinates are smoothed by a moving average of ``window`` points, then
    differentiated against arc length.  Open curves yield one value per
    interior point; closed curves one per point.
    """
    pts = _points(p)
    if closed is None:
        closed = bool(getattr(p, "closed", False))
    if len(pts) < 3:
        raise ValueError("curvature needs at least three points")
    mode = "wrap" if closed else "nearest"
    smooth = uniform_filter1d(pts, size=max(1, int(window)), axis=0, mode=mode)
    # closed curves wrap two points each way so both derivatives stay central
    pad = 2 if closed else 0
    if closed:
        smooth = np.vstack([smooth[-pad:], smooth, smooth[:pad]])
    keep = np.concatenate([[True], np.hypot(*np.diff(smooth, axis=0).T) > 1e-12])
    smooth = smooth[keep]
    if len(smooth) < 3 + 2 * pad:
        raise ValueError("polyline collapses to fewer than three distinct points")
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(smooth, axis=0).T))])
    dx, dy = np.gradient(smooth[:, 0], s), np.gradient(smooth[:, 1], s)
    ddx, ddy = np.gradient(dx, s), np.gradient(dy, s)
    kappa = np.abs(dx * ddy - dy * ddx) / np.power(dx * dx + dy * dy, 1.5)
    return kappa[pad:len(kappa) - pad] if closed else kappa[1:-1]


def curved(a, b, alpha: float = 1.0, beta: float = 1.0, samples: int = 128, window: int = 5) -> float:
    """Shape distance ``alpha * d_F + beta * mean |kappa_a - kappa_b|``.

    Both curves are first resampled to ``samples`` points evenly spaced in
    arc length, so the curvature profiles line up point for point.
    """
    ra, rb = resample(a, samples), resample(b, samples)
    ka = curvature_profile(ra, window, closed=False)
    kb = curvature_profile(rb, window, closed=False)
    return alpha * frechet_distance(ra, rb) + beta * float(np.mean(np.abs(ka - kb)))


def evaluate_inlines(pred_body=None, ref_body=None, pred_lines=None, ref_lines=None, inlines=None, slice_dims=None):
    """Per-inline rows for every inline in ``inlines``.

    By default the inlines are those carrying reference salt (or reference
    curves when no reference body is given).  Missing inputs leave the
    corresponding metrics as None.  ``slice_dims`` (section shape for
    ``salsim``) defaults to the body shape, else to the extent of the curves.
    """
    pred_lines = pred_lines or {}
    ref_lines = ref_lines or {}
    if inlines is None:
        if ref_body is not None:
            inlines = [int(k) for k in np.flatnonzero(np.asarray(ref_body).any(axis=(0, 1)))]
        else:
            inlines = sorted(ref_lines)
    for vol in (ref_body, pred_body):
        if slice_dims is None and vol is not None:
            slice_dims = np.asarray(vol).shape[:2]
    rows = []
    for k in inlines:
        row = InlineMetrics(int(k))
        if pred_body is not None and ref_body is not None:
            pm = pixel_metrics(confusion(np.asarray(pred_body)[:, :, k], np.asarray(ref_body)[:, :, k]))
            row.accuracy, row.precision, row.recall, row.f_score = pm.accuracy, pm.precision, pm.recall, pm.f_score
        if k in pred_lines and k in ref_lines:
            dims = slice_dims or _span(pred_lines[k], ref_lines[k])
            row.salsim = salsim(pred_lines[k], ref_lines[k], dims)
            row.curved = curved(pred_lines[k], ref_lines[k])
        rows.append(row)
    return rows


def _span(a: BoundaryPolyline, b: BoundaryPolyline):
    pts = np.vstack([_points(a), _points(b)])
    return int(pts[:, 1].max()) + 1, int(pts[:, 0].max()) + 1


def aggregate(rows) -> MetricsReport:
    """Mean and population standard deviation of each metric over the rows.

    Rows where a metric is None are left out of that metric's statistics;
    the count left out is reported as ``excluded``.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to aggregate")
    summary = {}
    for name in METRIC_NAMES:
        values = np.array([getattr(r, name) for r in rows if getattr(r, name) is not None], dtype=np.float64)
        summary[name] = {
            "mean": float(values.mean()) if values.size else None,
            "sd": float(values.std()) if values.size else None,
            "count": int(values.size),
            "excluded": len(rows) - int(values.size),
        }
    return MetricsReport(rows, summary)
