"""Post-processing of the grown body: dilation, perimeter and boundary curves."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .volume import BinaryVolume

__all__ = [
    "StructuringElement",
    "BoundaryPolyline",
    "dilate",
    "perimeter",
    "chain_points",
    "outer_contour",
    "slice_polyline",
    "extract_polylines",
    "write_polylines",
    "read_polylines",
    "MAX_LINK",
]

# largest gap (voxels) bridged when chaining boundary voxels into a curve
MAX_LINK = 2.0 * np.sqrt(2.0)


@dataclass(frozen=True)
class StructuringElement:
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 3 or len(set(mask.shape)) != 1 or mask.shape[0] % 2 == 0:
            raise ValueError(f"structuring element must be an odd-sided cube, got {mask.shape}")
        c = mask.shape[0] // 2
        if not mask[c, c, c]:
            raise ValueError("structuring element origin must be active")
        object.__setattr__(self, "mask", mask)

    @classmethod
    def cube(cls, side: int = 3) -> "StructuringElement":
        if side < 1 or side % 2 == 0:
            raise ValueError(f"side must be odd and >= 1, got {side}")
        return cls(np.ones((side, side, side), dtype=bool))

    @property
    def side(self) -> int:
        return self.mask.shape[0]

    def offsets(self):
        c = self.side // 2
        return [tuple(int(x) for x in o) for o in np.argwhere(self.mask) - c]


@dataclass(frozen=True)
class BoundaryPolyline:
    """Ordered boundary points of one inline, as ``(n, m)`` pairs."""

    points: np.ndarray
    closed: bool = False
    inline: int | None = None
    fragments: int = 1

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if len(pts) < 2:
            raise ValueError("a polyline needs at least two points")
        if np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise ValueError("consecutive polyline points must differ")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


def _shifted_or(mask: np.ndarray, offsets) -> np.ndarray:
    out = np.zeros_like(mask)
    shape = mask.shape
    for off in offsets:
        dst, src = [], []
        for d, size in zip(off, shape):
            dst.append(slice(max(0, -d), size - max(0, d)))
            src.append(slice(max(0, d), size - max(0, -d)))
        out[tuple(dst)] |= mask[tuple(src)]
    return out


def dilate(mask, se: StructuringElement | None = None) -> BinaryVolume:
    """Voxel ``v`` is set when ``v + o`` is set in ``mask`` for some active offset ``o``."""
    se = se or StructuringElement.cube(3)
    return BinaryVolume(_shifted_or(np.asarray(mask, dtype=bool), se.offsets()))


def perimeter(mask, outside_is_background: bool = True) -> BinaryVolume:
    """Set voxels with at least one unset voxel among their 26 neighbours.

    With ``outside_is_background`` the space beyond the volume counts as
    unset, so a body touching a face is closed off along that face.
    """
    bits = np.asarray(mask, dtype=bool)
    padded = np.pad(bits, 1, constant_values=not outside_is_background)
    interior = np.ones_like(bits)
    m, n, k = bits.shape
    for dm in (-1, 0, 1):
        for dn in (-1, 0, 1):
            for dk in (-1, 0, 1):
                interior &= padded[1 + dm: 1 + dm + m, 1 + dn: 1 + dn + n, 1 + dk: 1 + dk + k]
    return BinaryVolume(bits & ~interior)


def chain_points(points, max_link: float = MAX_LINK):
    """Order 2D lattice points into chains by greedy nearest-neighbour linking.

    Each chain is seeded at the smallest remaining ``(n, m)`` point.  It is
    extended from its tail by repeatedly stepping to the closest free point
    (ties to the smallest ``(n, m)``), then extended the same way from its
    head, so a seed in the middle of a curve still yields one chain.  A gap
    wider than ``max_link`` stops the extension.  Returns the chains as index
    arrays into ``points``, in creation order.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    sorted_pts = pts[order]
    free = np.ones(len(pts), dtype=bool)
    limit = max_link * max_link + 1e-9

    def walk(cur):
        path = []
        while free.any():
            cand = np.flatnonzero(free)
            d2 = ((sorted_pts[cand] - sorted_pts[cur]) ** 2).sum(axis=1)
            j = int(np.argmin(d2))
            if d2[j] > limit:
                break
            cur = int(cand[j])
            free[cur] = False
            path.append(cur)
        return path

    chains = []
    while free.any():
        start = int(np.argmax(free))
        free[start] = False
        forward = walk(start)
        backward = walk(start)
        chain = backward[::-1] + [start] + forward
        if tuple(sorted_pts[chain[-1]]) < tuple(sorted_pts[chain[0]]):
            chain.reverse()
        chains.append(order[np.array(chain)])
    return chains


def _is_closed(pts: np.ndarray) -> bool:
    return len(pts) > 2 and float(np.hypot(*(pts[-1] - pts[0]))) <= np.sqrt(2.0) + 1e-9


def outer_contour(section) -> np.ndarray:
    """Pixels of the hole-filled section with a 4-neighbour outside it.

    The result is a thin 8-connected curve.  Filled holes never qualify, so
    every returned pixel belongs to ``section``.
    """
    filled = ndimage.binary_fill_holes(np.asarray(section, dtype=bool))
    core = ndimage.binary_erosion(filled, structure=ndimage.generate_binary_structure(2, 1), border_value=0)
    return filled & ~core


def slice_polyline(section, inline=None, exclude_bottom: bool = True, max_link: float = MAX_LINK):
    """Boundary curve of one ``(m, n)`` section, or None when it has < 2 points.

    Only the outer contour of the section is traced, so thick boundary
    patches (where the surface runs obliquely through the section) reduce to
    a one-pixel curve.
    """
    contour = outer_contour(section)
    if exclude_bottom:
        contour[-1, :] = False
    mn = np.argwhere(contour)
    if len(mn) < 2:
        return None
    pts = mn[:, ::-1].astype(np.float64)  # (n, m)
    chains = chain_points(pts, max_link)
    longest = max(chains, key=len)
    if len(longest) < 2:
        return None
    curve = pts[longest]
    return BoundaryPolyline(curve, closed=_is_closed(curve), inline=inline, fragments=len(chains))


def extract_polylines(sd_b, exclude_bottom: bool = True, max_link: float = MAX_LINK) -> dict:
    """One boundary curve per inline ``k`` that has boundary voxels.

    Voxels on the bottom face (last time sample) are dropped first when
    ``exclude_bottom`` is set, leaving curves open at the volume bottom.
    """
    bits = np.asarray(sd_b, dtype=bool)
    out = {}
    for k in range(bits.shape[2]):
        line = slice_polyline(bits[:, :, k], k, exclude_bottom, max_link)
        if line is not None:
            out[k] = line
    return out


def write_polylines(polylines: dict, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["inline_k", "crossline_n", "time_m"])
        for k in sorted(polylines):
            for n, m in polylines[k].points:
                writer.writerow([k, _fmt(n), _fmt(m)])


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def read_polylines(path) -> dict:
    rows: dict[int, list] = {}
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"inline_k", "crossline_n", "time_m"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            rows.setdefault(int(row["inline_k"]), []).append((float(row["crossline_n"]), float(row["time_m"])))
    out = {}
    for k, pts in rows.items():
        pts = np.array(pts)
        out[k] = BoundaryPolyline(pts, closed=_is_closed(pts), inline=k)
    return out
