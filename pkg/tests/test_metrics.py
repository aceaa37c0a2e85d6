import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import exhaustive_frechet, hausdorff, two_pass_mean_sd
from salsi.metrics import (
    ConfusionCounts,
    InlineMetrics,
    aggregate,
    confusion,
    curvature_profile,
    curved,
    evaluate_inlines,
    frechet_distance,
    pixel_metrics,
    resample,
    salsim,
)
from salsi.morphology import BoundaryPolyline


def _line(n0, n1, m, count=11):
    return np.column_stack([np.linspace(n0, n1, count), np.full(count, float(m))])


def test_confusion_examples():
    pred = np.array([[1, 1, 0, 0]], dtype=bool)
    ref = np.array([[1, 0, 1, 0]], dtype=bool)
    assert confusion(pred, ref) == ConfusionCounts(tp=1, tn=1, fp=1, fn=1)
    with pytest.raises(ValueError):
        confusion(pred, ref.T)


@given(arrays(bool, (4, 5), elements=st.booleans()), arrays(bool, (4, 5), elements=st.booleans()))
def test_confusion_matches_counting(pred, ref):
    c = confusion(pred, ref)
    pairs = list(zip(pred.ravel(), ref.ravel()))
    assert c.tp == pairs.count((True, True)) and c.tn == pairs.count((False, False))
    assert c.fp == pairs.count((True, False)) and c.fn == pairs.count((False, True))
    assert c.total == pred.size
    # accuracy treats both classes alike
    assert pixel_metrics(c).accuracy == pytest.approx(pixel_metrics(confusion(~pred, ~ref)).accuracy)


def test_pixel_metrics_worked_example():
    m = pixel_metrics(ConfusionCounts(tp=8, tn=88, fp=2, fn=2))
    assert m.accuracy == pytest.approx(0.96)
    assert m.precision == pytest.approx(0.8)
    assert m.recall == pytest.approx(0.8)
    assert m.f_score == pytest.approx(0.8)


def test_undefined_metrics_are_none():
    m = pixel_metrics(ConfusionCounts(tp=0, tn=10, fp=0, fn=0))
    assert m.accuracy == 1.0 and m.precision is None and m.recall is None and m.f_score is None
    m = pixel_metrics(ConfusionCounts(tp=0, tn=5, fp=3, fn=2))
    assert m.precision == 0.0 and m.recall == 0.0 and m.f_score == 0.0


def test_frechet_parallel_segments():
    assert frechet_distance(_line(0, 10, 0), _line(0, 10, 3)) == pytest.approx(3.0)
    assert frechet_distance(_line(0, 10, 0), _line(0, 10, 0)) == 0.0


def test_frechet_respects_order():
    a = _line(0, 10, 0)
    # same point set, reversed traversal
    assert frechet_distance(a, a[::-1]) == pytest.approx(10.0)


curves = arrays(np.float64, st.tuples(st.integers(1, 6), st.just(2)), elements=st.floats(-20, 20))


@given(curves, curves)
def test_frechet_against_exhaustive_and_bounds(a, b):
    d = frechet_distance(a, b)
    assert d == pytest.approx(frechet_distance(b, a), abs=1e-12)
    assert d == pytest.approx(exhaustive_frechet(a, b), abs=1e-9)
    assert d >= hausdorff(a, b) - 1e-9


def test_salsim_offset_and_clamp():
    a, b = _line(0, 20, 5), _line(0, 20, 9)
    diag = math.hypot(63, 63)
    assert salsim(a, b, (64, 64)) == pytest.approx(1 - 4 / diag)
    assert salsim(a, a, (64, 64)) == 1.0
    assert salsim(_line(0, 1, 0), _line(0, 1, 100), (4, 4)) == 0.0


def test_curved_translation_is_alpha_times_shift():
    theta = np.linspace(0, np.pi, 40)
    a = np.column_stack([20 + 10 * np.cos(theta), 20 + 10 * np.sin(theta)])
    b = a + [0.0, 3.0]
    assert curved(a, b, alpha=2.0) == pytest.approx(6.0, abs=1e-9)


def test_curved_sees_shape_difference():
    theta = np.linspace(0, np.pi, 60)
    arc = np.column_stack([10 * np.cos(theta), 10 * np.sin(theta)])
    flat = np.column_stack([np.linspace(10, -10, 60), np.zeros(60)])
    assert curved(arc, flat, alpha=0.0) > 0.05
    assert curved(flat, flat) == 0.0


def test_straight_line_has_zero_curvature():
    assert np.abs(curvature_profile(_line(0, 30, 4, 31))).max() < 1e-12


def test_circle_curvature():
    theta = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    circle = BoundaryPolyline(np.column_stack([30 + 12 * np.cos(theta), 30 + 12 * np.sin(theta)]), closed=True)
    kappa = curvature_profile(circle)
    assert len(kappa) == 200
    assert np.allclose(kappa, 1 / 12, rtol=1e-3)


def test_curvature_rotation_invariant():
    rng = np.random.default_rng(0)
    pts = np.cumsum(rng.normal(size=(40, 2)), axis=0)
    c, s = math.cos(0.7), math.sin(0.7)
    rotated = pts @ np.array([[c, -s], [s, c]]).T
    assert np.abs(curvature_profile(pts) - curvature_profile(rotated)).max() < 1e-6


def test_resample_even_spacing():
    pts = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 5.0]])
    r = resample(pts, 16)
    steps = np.hypot(*np.diff(r, axis=0).T)
    assert len(r) == 16 and np.allclose(steps, 1.0)


def test_aggregate_single_and_pair():
    report = aggregate([InlineMetrics(0, f_score=0.9)])
    assert report.summary["f_score"] == {"mean": 0.9, "sd": 0.0, "count": 1, "excluded": 0}
    report = aggregate([InlineMetrics(0, f_score=0.9), InlineMetrics(1, f_score=1.0)])
    assert report.mean("f_score") == pytest.approx(0.95)
    assert report.summary["f_score"]["sd"] == pytest.approx(0.05)
    assert report.summary["salsim"]["mean"] is None and report.summary["salsim"]["excluded"] == 2


def test_aggregate_57_rows_matches_two_pass():
    values = list(np.random.default_rng(1).uniform(0.8, 1.0, 57))
    report = aggregate([InlineMetrics(i, accuracy=v) for i, v in enumerate(values)])
    mean, sd = two_pass_mean_sd(values)
    assert report.summary["accuracy"]["mean"] == pytest.approx(mean, abs=1e-12)
    assert report.summary["accuracy"]["sd"] == pytest.approx(sd, abs=1e-12)


def test_aggregate_counts_exclusions():
    rows = [InlineMetrics(0, precision=0.5), InlineMetrics(1), InlineMetrics(2, precision=1.0)]
    s = aggregate(rows).summary["precision"]
    assert s["count"] == 2 and s["excluded"] == 1 and s["mean"] == pytest.approx(0.75)


def test_aggregate_empty_rejected():
    with pytest.raises(ValueError):
        aggregate([])


def test_evaluate_inlines_rows_follow_reference():
    ref = np.zeros((8, 8, 4), dtype=bool)
    ref[3:, 2:6, 1:3] = True
    pred = ref.copy()
    pred[2, 2:6, 1] = True
    line = BoundaryPolyline(_line(2, 5, 3, 4), inline=1)
    rows = evaluate_inlines(pred, ref, {1: line}, {1: line})
    assert [r.inline for r in rows] == [1, 2]
    assert rows[0].salsim == 1.0 and rows[0].curved == 0.0 and rows[1].salsim is None
    assert rows[0].precision == pytest.approx(20 / 24) and rows[1].accuracy == 1.0
