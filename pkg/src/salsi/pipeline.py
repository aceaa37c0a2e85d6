"""End-to-end salt-dome delineation with persisted intermediates.

Stages run in a fixed order: saliency, threshold, region growing,
post-processing (dilation, perimeter, boundary curves) and, when a
reference is supplied, metrics.  Every intermediate is written to the
output directory so single stages can be re-run from disk.

Output directory layout::

    config.json            effective configuration (output path and thread budget omitted)
    S.f32 / S.hdr          saliency map
    threshold.json         chosen threshold and class statistics
    B.u8 / B.hdr           binarised saliency (the boundary volume)
    growing.json           grown voxel count and leakage diagnostic
    SD.u8 / SD.hdr         grown salt body
    SD_D.u8 / SD_D.hdr     dilated body
    SD_B.u8 / SD_B.hdr     body perimeter
    polylines.csv          one boundary curve per inline
    metrics.csv            per-inline metrics (only with a reference)
    metrics.json           per-inline rows plus aggregate statistics
    slices/inline_K.png    requested slice images with boundary overlays

Wall-clock timings are returned but never written into the output
directory, so two runs of the same configuration give identical files.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .binarize import apply_threshold, build_histogram, otsu_threshold
from .growing import LEAKAGE_LIMIT, grow_binary, leakage_fraction
from .metrics import METRIC_NAMES, MetricsReport, aggregate, evaluate_inlines
from .morphology import StructuringElement, dilate, extract_polylines, perimeter, read_polylines, write_polylines
from .saliency import SaliencyParams, compute_saliency
from .volume import BinaryVolume, Dims, VoxelIndex, load_mask, load_volume, save_mask, save_volume

__all__ = [
    "ConfigError",
    "StageError",
    "RunConfig",
    "StageTimings",
    "RunResult",
    "run_pipeline",
    "stage_saliency",
    "stage_threshold",
    "stage_grow",
    "stage_post",
    "stage_metrics",
    "export_slice_image",
    "render_report",
    "write_metrics",
    "read_metrics",
    "header_for",
    "LITERATURE_TABLE1",
    "LITERATURE_TABLE2",
]


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def header_for(path) -> Path:
    """Header path paired with a raw data file: same name, ``.hdr`` suffix."""
    return Path(path).with_suffix(".hdr")


@dataclass
class RunConfig:
    input: str | None = None
    header: str | None = None
    out: str = "salsi_out"
    window: int = 3
    tiling: str = "tile"
    surround_grid: str = "tile"
    threshold: str | float = "auto"
    seeds: list = field(default_factory=list)
    connectivity: int = 6
    se_side: int = 3
    slices: list = field(default_factory=list)
    threads: int = 1
    reference_polylines: str | None = None
    reference_mask: str | None = None

    def __post_init__(self):
        self.seeds = [tuple(int(x) for x in s) for s in self.seeds]
        self.slices = [int(k) for k in self.slices]
        if isinstance(self.threshold, str) and self.threshold != "auto":
            try:
                self.threshold = float(self.threshold)
            except ValueError:
                raise ConfigError(f"threshold must be 'auto' or a number, got {self.threshold!r}") from None

    @property
    def saliency_params(self) -> SaliencyParams:
        return SaliencyParams(window=self.window, tiling=self.tiling, surround_grid=self.surround_grid)

    @property
    def header_path(self) -> Path:
        return Path(self.header) if self.header else header_for(self.input)

    def check(self, dims: Dims | None = None):
        """Validate the parameter surface, and against ``dims`` when given."""
        try:
            params = self.saliency_params
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.connectivity not in (6, 26):
            raise ConfigError(f"connectivity must be 6 or 26, got {self.connectivity}")
        if self.se_side < 1 or self.se_side % 2 == 0:
            raise ConfigError(f"structuring-element side must be odd and >= 1, got {self.se_side}")
        if self.threads < 1:
            raise ConfigError(f"thread budget must be >= 1, got {self.threads}")
        if not self.seeds:
            raise ConfigError("at least one seed (m,n,k) is required")
        if self.threshold != "auto" and not np.isfinite(self.threshold):
            raise ConfigError(f"manual threshold must be finite, got {self.threshold}")
        if dims is None:
            return
        if min(dims.shape) < params.window:
            raise ConfigError(f"window {params.window} exceeds volume dims {dims.shape}")
        for s in self.seeds:
            if not VoxelIndex(*s).inside(dims):
                raise ConfigError(f"seed {s} lies outside volume {dims.shape}")
        for k in self.slices:
            if not 0 <= k < dims.k:
                raise ConfigError(f"slice {k} outside inline range 0..{dims.k - 1}")

    def to_dict(self, portable: bool = False) -> dict:
        """Field dict; ``portable`` drops the output path and thread budget,
        which do not affect results."""
        data = asdict(self)
        data["seeds"] = [list(s) for s in self.seeds]
        if portable:
            data.pop("out")
            data.pop("threads")
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)


@dataclass
class StageTimings:
    saliency: float = 0.0
    threshold: float = 0.0
    growing: float = 0.0
    post_process: float = 0.0
    metrics: float = 0.0
    total: float = 0.0

    STAGES = ("saliency", "threshold", "growing", "post_process", "metrics")

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in (*self.STAGES, "total")}


@dataclass
class RunResult:
    sd_b: BinaryVolume
    polylines: dict
    report: MetricsReport | None
    timings: StageTimings
    leakage: float
    threshold: float

    def __iter__(self):
        return iter((self.sd_b, self.polylines, self.report, self.timings))


# --------------------------------------------------------------------------
# stages
# --------------------------------------------------------------------------

def _write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def stage_saliency(volume, params: SaliencyParams, out: Path, threads: int = 1) -> np.ndarray:
    # persisted precision is float32; later stages use exactly what is on disk
    s = np.asarray(compute_saliency(volume, params, threads=threads).s, dtype=np.float32)
    save_volume(s, out / "S.f32", out / "S.hdr", meta=getattr(volume, "meta", {}))
    return s


def stage_threshold(s, threshold, out: Path) -> tuple[BinaryVolume, float]:
    """Binarise ``s``.  A manual ``threshold`` is in max-normalised units,
    so 1.0 keeps only the peak and anything above 1 keeps nothing."""
    s = np.asarray(s)
    peak = float(s.max())
    if threshold == "auto":
        result = otsu_threshold(build_histogram(s))
        info = {"mode": "auto", **result.as_dict()}
        value = result.value
    else:
        value = float(threshold) * peak
        info = {"mode": "manual", "normalized": float(threshold), "value": value}
    info["max_saliency"] = peak
    b = apply_threshold(s, value)
    info["boundary_voxels"] = b.count()
    _write_json(out / "threshold.json", info)
    save_mask(b, out / "B.u8", out / "B.hdr")
    return b, value


def stage_grow(b, seeds, connectivity: int, out: Path) -> tuple[BinaryVolume, float]:
    sd = grow_binary(b, seeds, connectivity)
    leak = leakage_fraction(sd)
    _write_json(out / "growing.json", {
        "seeds": [list(s) for s in seeds],
        "connectivity": connectivity,
        "voxels": sd.count(),
        "whole_volume": sd.count() == sd.bits.size,
        "leakage_fraction": leak,
        "leakage": leak >= LEAKAGE_LIMIT,
    })
    save_mask(sd, out / "SD.u8", out / "SD.hdr")
    return sd, leak


def stage_post(sd, se_side: int, out: Path):
    sd_d = dilate(sd, StructuringElement.cube(se_side))
    sd_b = perimeter(sd_d)
    polylines = extract_polylines(sd_b)
    save_mask(sd_d, out / "SD_D.u8", out / "SD_D.hdr")
    save_mask(sd_b, out / "SD_B.u8", out / "SD_B.hdr")
    write_polylines(polylines, out / "polylines.csv")
    return sd_d, sd_b, polylines


def stage_metrics(pred_body, ref_body, pred_lines, ref_lines, out: Path) -> MetricsReport:
    rows = evaluate_inlines(pred_body, ref_body, pred_lines, ref_lines)
    report = aggregate(rows)
    write_metrics(report, out)
    return report


def write_metrics(report: MetricsReport, out: Path):
    with open(out / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["inline", *METRIC_NAMES])
        for row in report.rows:
            writer.writerow([row.inline, *("" if getattr(row, n) is None else repr(getattr(row, n)) for n in METRIC_NAMES)])
    _write_json(out / "metrics.json", report.to_dict())


def read_metrics(path) -> MetricsReport:
    path = Path(path)
    if path.is_dir():
        path = path / "metrics.json"
    return MetricsReport.from_dict(json.loads(path.read_text()))


def _warm_up(params: SaliencyParams):
    # first FFT calls pay plan and import costs that do not belong to any stage
    side = params.window
    compute_saliency(np.zeros((2 * side, 2 * side, 2 * side)), params)


def run_pipeline(config: RunConfig, volume=None, warm_up: bool = True) -> RunResult:
    """Run every stage for ``config`` and persist the intermediates.

    ``volume`` may be passed directly instead of being read from
    ``config.input``.  A failing stage raises :class:`StageError`; files
    written by earlier stages stay in place.
    """
    config.check()
    if volume is None:
        if not config.input:
            raise ConfigError("no input volume given")
        volume = load_volume(config.input, config.header_path)
    dims = Dims.of(np.asarray(volume).shape)
    config.check(dims)

    ref_lines = read_polylines(config.reference_polylines) if config.reference_polylines else None
    ref_body = load_mask(config.reference_mask, header_for(config.reference_mask)) if config.reference_mask else None
    if ref_body is not None and ref_body.dims != dims:
        raise ConfigError(f"reference mask dims {ref_body.dims.shape} differ from volume {dims.shape}")

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", config.to_dict(portable=True))

    params = config.saliency_params
    if warm_up:
        _warm_up(params)
    timings = StageTimings()
    start = time.perf_counter()

    def timed(name, func, *args):
        t0 = time.perf_counter()
        try:
            result = func(*args)
        except Exception as exc:
            raise StageError(name, exc) from exc
        setattr(timings, name, time.perf_counter() - t0)
        return result

    s = timed("saliency", stage_saliency, volume, params, out, config.threads)
    b, value = timed("threshold", stage_threshold, s, config.threshold, out)
    sd, leak = timed("growing", stage_grow, b, config.seeds, config.connectivity, out)
    sd_d, sd_b, polylines = timed("post_process", stage_post, sd, config.se_side, out)
    report = None
    if ref_lines is not None or ref_body is not None:
        report = timed("metrics", stage_metrics, sd_d if ref_body is not None else None, ref_body, polylines, ref_lines, out)
    timings.total = time.perf_counter() - start

    if config.slices:
        slice_dir = out / "slices"
        slice_dir.mkdir(exist_ok=True)
        for k in config.slices:
            overlays = [(polylines, (0, 255, 0))]
            if ref_lines is not None:
                overlays.insert(0, (ref_lines, (255, 0, 0)))
            export_slice_image(volume, k, slice_dir / f"inline_{k:04d}.png", overlays)

    return RunResult(sd_b, polylines, report, timings, leak, value)


# --------------------------------------------------------------------------
# slice images
# --------------------------------------------------------------------------

def _scale_to_u8(section: np.ndarray) -> np.ndarray:
    lo, hi = float(section.min()), float(section.max())
    if not hi > lo:
        return np.full(section.shape, 128, dtype=np.uint8)
    return np.round((section - lo) / (hi - lo) * 255.0).astype(np.uint8)


def export_slice_image(data, k: int, path=None, overlays=()) -> np.ndarray:
    """Render inline ``k`` as an 8-bit image, rows = time, columns = crossline.

    ``overlays`` is a sequence of ``(polylines, rgb)`` pairs, where
    ``polylines`` is a single curve or a dict keyed by inline.  Without
    overlays the image is grayscale; otherwise the curve points are burned
    in with their colour over a grayscale RGB rendering.  Returns the pixel
    array and writes a PNG when ``path`` is given.
    """
    vol = np.asarray(data)
    if vol.ndim != 3:
        raise ValueError(f"expected a 3D volume, got shape {vol.shape}")
    if not 0 <= k < vol.shape[2]:
        raise IndexError(f"inline {k} outside range 0..{vol.shape[2] - 1}")
    image = _scale_to_u8(vol[:, :, k].astype(np.float64))
    overlays = list(overlays)
    if overlays:
        image = np.repeat(image[:, :, None], 3, axis=2)
        for lines, colour in overlays:
            line = lines.get(k) if isinstance(lines, dict) else lines
            if line is None:
                continue
            pts = np.rint(np.asarray(getattr(line, "points", line))).astype(int)
            n, m = pts[:, 0], pts[:, 1]
            ok = (m >= 0) & (m < image.shape[0]) & (n >= 0) & (n < image.shape[1])
            image[m[ok], n[ok]] = colour
    if path is not None:
        from PIL import Image

        Image.fromarray(image).save(path)
    return image


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

# Published values, not recomputed: mean and SD over 57 hand-labelled inlines
# of a field survey.  Accuracy and precision in percent.
LITERATURE_TABLE1 = {
    "Zhen2015": {"accuracy": (96.32, 1.30), "precision": (96.40, 1.85), "f_score": (0.9403, 0.0232)},
    "Shafiq2015": {"accuracy": (97.35, 0.50), "precision": (94.86, 2.59), "f_score": (0.9591, 0.0070)},
    "Berthelot2013": {"accuracy": (95.84, 4.75), "precision": (96.26, 1.77), "f_score": (0.9239, 0.1085)},
    "Aqrawi2011": {"accuracy": (95.72, 1.22), "precision": (89.79, 3.20), "f_score": (0.9361, 0.0176)},
    "Codebook": {"accuracy": (96.69, 2.23), "precision": (95.26, 3.24), "f_score": (0.9470, 0.0447)},
    "Proposed": {"accuracy": (97.59, 0.45), "precision": (97.76, 1.19), "f_score": (0.9616, 0.0072)},
}

# Published values, not recomputed: SalSIM, CurveD (mean, SD) and runtime in seconds.
LITERATURE_TABLE2 = {
    "Zhen2015": {"salsim": (0.8573, 0.0844), "curved": (21.5004, 4.2859), "time": 11.4895},
    "Shafiq2015": {"salsim": (0.9232, 0.0136), "curved": (17.3355, 2.4872), "time": 63.3162},
    "Berthelot2013": {"salsim": (0.8439, 0.0730), "curved": (45.9306, 19.7698), "time": 33.5447},
    "Aqrawi2011": {"salsim": (0.8845, 0.0605), "curved": (23.8682, 4.8281), "time": 0.98110},
    "Codebook": {"salsim": (0.8643, 0.0333), "curved": (38.7502, 9.6533), "time": 0.68480},
    "Proposed": {"salsim": (0.9405, 0.0095), "curved": (14.8835, 2.4268), "time": 0.39520},
}

_FIXTURES = {"table1": LITERATURE_TABLE1, "table2": LITERATURE_TABLE2}

TIMING_NOTE = (
    "Timing: wall-clock seconds per stage (time.perf_counter), single process, "
    "after one untimed warm-up call of the saliency kernel."
)


def _fmt(value, digits=4):
    return "-" if value is None else f"{value:.{digits}f}"


def _table(header, rows, best_cols=None):
    """Plain-text table; cells listed in ``best_cols`` rows get a trailing '*'."""
    best_cols = best_cols or {}
    cells = [[str(c) for c in header]]
    for r, row in enumerate(rows):
        cells.append([str(c) + ("*" if r in best_cols.get(j, ()) else "") for j, c in enumerate(row)])
    widths = [max(len(row[j]) for row in cells) for j in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _best_rows(values, maximize=True):
    present = [(v, i) for i, v in enumerate(values) if v is not None]
    if not present:
        return set()
    target = max(present)[0] if maximize else min(present)[0]
    return {i for v, i in present if v == target}


def render_report(report: MetricsReport, timings: StageTimings | dict | None = None, fixtures=_FIXTURES) -> str:
    """Per-inline table, aggregates, stage timings and literature rows.

    The best value in each comparison column is marked with ``*``.
    """
    if not report.rows:
        raise ValueError("report has no rows")
    if isinstance(timings, StageTimings):
        timings = timings.as_dict()
    out = []

    out.append("Per-inline metrics")
    rows = [[r.inline, *(_fmt(getattr(r, n)) for n in METRIC_NAMES)] for r in report.rows]
    out.append(_table(["inline", *METRIC_NAMES], rows))

    out.append("")
    out.append("Aggregate (mean, population SD, rows left out)")
    agg = []
    for name in METRIC_NAMES:
        s = report.summary[name]
        agg.append([name, _fmt(s["mean"]), _fmt(s["sd"]), s["count"], s["excluded"]])
    out.append(_table(["metric", "mean", "sd", "n", "excluded"], agg))

    def mean_sd(name, scale=1.0, digits=4):
        s = report.summary[name]
        if s["mean"] is None:
            return None, "-"
        return s["mean"] * scale, f"{s['mean'] * scale:.{digits}f} +/- {s['sd'] * scale:.{digits}f}"

    # pixel metrics laid out like the published accuracy/precision/F table
    table1 = fixtures.get("table1", {})
    names = [*table1, "this run"]
    cols = {"accuracy": [], "precision": [], "f_score": []}
    text = {c: [] for c in cols}
    for method in table1:
        for c, digits in (("accuracy", 2), ("precision", 2), ("f_score", 4)):
            mean, sd = table1[method][c]
            cols[c].append(mean)
            text[c].append(f"{mean:.{digits}f} +/- {sd:.{digits}f}")
    for c, scale, digits in (("accuracy", 100.0, 2), ("precision", 100.0, 2), ("f_score", 1.0, 4)):
        v, t = mean_sd(c, scale, digits)
        cols[c].append(v)
        text[c].append(t)
    best = {j + 1: _best_rows(cols[c]) for j, c in enumerate(cols)}
    out.append("")
    out.append("Pixel metrics vs published values (published values, not recomputed)")
    rows = [[names[i], text["accuracy"][i], text["precision"][i], text["f_score"][i]] for i in range(len(names))]
    out.append(_table(["method", "accuracy %", "precision %", "F-score"], rows, best))

    # shape metrics and runtime laid out like the published SalSIM/CurveD/time table
    table2 = fixtures.get("table2", {})
    names = [*table2, "this run"]
    sal, cur, tim, text = [], [], [], []
    for method in table2:
        f = table2[method]
        sal.append(f["salsim"][0])
        cur.append(f["curved"][0])
        tim.append(f["time"])
        text.append([f"{f['salsim'][0]:.4f} +/- {f['salsim'][1]:.4f}", f"{f['curved'][0]:.4f} +/- {f['curved'][1]:.4f}", f"{f['time']:.4f}"])
    v_sal, t_sal = mean_sd("salsim")
    v_cur, t_cur = mean_sd("curved")
    total = timings.get("total") if timings else None
    sal.append(v_sal)
    cur.append(v_cur)
    tim.append(total)
    text.append([t_sal, t_cur, _fmt(total)])
    best = {1: _best_rows(sal), 2: _best_rows(cur, maximize=False), 3: _best_rows(tim, maximize=False)}
    out.append("")
    out.append("Shape metrics and runtime vs published values (published values, not recomputed)")
    out.append(_table(["method", "SalSIM", "CurveD", "time (s)"], [[n, *t] for n, t in zip(names, text)], best))

    if timings:
        out.append("")
        out.append("Stage timings (s)")
        out.append(TIMING_NOTE)
        out.append(_table(["stage", "time (s)"], [[k, f"{v:.4f}"] for k, v in timings.items()]))
    return "\n".join(out) + "\n"
