"""Histogram thresholding of saliency maps (Otsu's method)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .volume import BinaryVolume

__all__ = [
    "DegenerateHistogramError",
    "Histogram",
    "ThresholdResult",
    "build_histogram",
    "intra_class_variance",
    "inter_class_variance",
    "otsu_threshold",
    "apply_threshold",
]

# relative tolerance under which two objective values count as a tie
TIE_RTOL = 1e-12


class DegenerateHistogramError(ValueError):
    """The data cannot be split into two classes."""


@dataclass(frozen=True)
class Histogram:
    p: np.ndarray
    low: float
    high: float

    @property
    def bins(self) -> int:
        return len(self.p)

    @property
    def width(self) -> float:
        return (self.high - self.low) / self.bins

    def edge(self, t: int) -> float:
        """Lower edge of bin ``t`` in data units."""
        return self.low + t * self.width


@dataclass(frozen=True)
class ThresholdResult:
    t: int
    value: float
    p1: float
    p2: float
    mu1: float
    mu2: float
    var1: float
    var2: float
    objective: np.ndarray  # inter-class variance for candidates 1..H-1, NaN where undefined

    def as_dict(self) -> dict:
        return {
            "bin": self.t,
            "value": self.value,
            "p1": self.p1,
            "p2": self.p2,
            "mu1": self.mu1,
            "mu2": self.mu2,
            "var1": self.var1,
            "var2": self.var2,
            "objective": [None if np.isnan(x) else float(x) for x in self.objective],
        }


def build_histogram(values, bins: int = 256) -> Histogram:
    if bins < 2:
        raise ValueError("need at least two bins")
    x = np.asarray(values, dtype=np.float64).ravel()
    if not np.isfinite(x).all():
        raise ValueError("histogram input contains non-finite values")
    low, high = float(x.min()), float(x.max())
    if not high > low:
        raise DegenerateHistogramError(f"constant input ({low}); supply a manual threshold")
    idx = np.floor((x - low) / (high - low) * bins).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    counts = np.bincount(idx, minlength=bins)
    return Histogram(counts / x.size, low, high)


def _class_moments(p: np.ndarray):
    """Cumulative class mass, mean and variance for every split 1..H-1."""
    i = np.arange(len(p), dtype=np.float64)
    moments = np.stack([p, p * i, p * i * i])
    # upper-class sums are accumulated from the top so tiny masses survive
    lower = np.cumsum(moments, axis=1)[:, :-1]
    upper = np.cumsum(moments[:, ::-1], axis=1)[:, ::-1][:, 1:]
    p1, s1, q1 = lower
    p2, s2, q2 = upper
    with np.errstate(invalid="ignore", divide="ignore"):
        mu1, mu2 = s1 / p1, s2 / p2
        var1 = np.maximum(q1 / p1 - mu1 ** 2, 0.0)
        var2 = np.maximum(q2 / p2 - mu2 ** 2, 0.0)
    valid = (p1 > 0) & (p2 > 0)
    return p1, p2, mu1, mu2, var1, var2, valid


def intra_class_variance(p) -> np.ndarray:
    """Weighted within-class variance for thresholds 1..H-1 (NaN if a class is empty)."""
    p1, p2, _, _, var1, var2, valid = _class_moments(np.asarray(p, dtype=np.float64))
    return np.where(valid, p1 * var1 + p2 * var2, np.nan)


def inter_class_variance(p) -> np.ndarray:
    """Between-class variance ``p1 p2 (mu1 - mu2)^2`` for thresholds 1..H-1."""
    p1, p2, mu1, mu2, _, _, valid = _class_moments(np.asarray(p, dtype=np.float64))
    return np.where(valid, p1 * p2 * (mu1 - mu2) ** 2, np.nan)


def _best(objective: np.ndarray, maximize: bool) -> int:
    finite = np.where(np.isnan(objective), -np.inf if maximize else np.inf, objective)
    best = finite.max() if maximize else finite.min()
    tol = TIE_RTOL * max(abs(best), 1.0)
    hits = np.flatnonzero(finite >= best - tol) if maximize else np.flatnonzero(finite <= best + tol)
    return int(hits[0]) + 1


def otsu_threshold(h: Histogram) -> ThresholdResult:
    """Split maximising the inter-class variance; smallest bin wins ties."""
    p = np.asarray(h.p, dtype=np.float64)
    p1, p2, mu1, mu2, var1, var2, valid = _class_moments(p)
    if not valid.any():
        raise DegenerateHistogramError("all histogram mass lies in a single bin")
    objective = np.where(valid, p1 * p2 * (mu1 - mu2) ** 2, np.nan)
    t = _best(objective, maximize=True)
    j = t - 1
    return ThresholdResult(
        t=t,
        value=h.edge(t),
        p1=float(p1[j]),
        p2=float(p2[j]),
        mu1=float(mu1[j]),
        mu2=float(mu2[j]),
        var1=float(var1[j]),
        var2=float(var2[j]),
        objective=objective,
    )


def apply_threshold(saliency, t: float) -> BinaryVolume:
    if not np.isfinite(t):
        raise ValueError(f"threshold must be finite, got {t}")
    return BinaryVolume(np.asarray(saliency) >= t)
