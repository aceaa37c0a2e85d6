"""Seeded 3D region growing.

``grow_binary`` is the flood fill used by the delineation workflow: it grows
through the zeros of a binary boundary volume until it meets ones.
``grow_intensity`` is the classic intensity-driven seeded region growing,
kept as a standalone tool.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .volume import BinaryVolume, Dims, VoxelIndex, neighbor_offsets

__all__ = [
    "SeedError",
    "RegionLabeling",
    "validate_seeds",
    "grow_binary",
    "grow_intensity",
    "frontier",
    "leakage_fraction",
    "LEAKAGE_LIMIT",
]

# fraction of outer-face voxels reached by the grown body that flags leakage
LEAKAGE_LIMIT = 0.25


class SeedError(ValueError):
    pass


@dataclass(frozen=True)
class RegionLabeling:
    """Per-voxel region labels; 0 marks unallocated voxels."""

    labels: np.ndarray

    @property
    def n_regions(self) -> int:
        return int(self.labels.max(initial=0))

    def counts(self) -> dict[int, int]:
        values, counts = np.unique(self.labels[self.labels > 0], return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 6:
        return ndimage.generate_binary_structure(3, 1)
    if connectivity == 26:
        return ndimage.generate_binary_structure(3, 3)
    raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")


def validate_seeds(seeds, dims: Dims, boundary=None) -> list[VoxelIndex]:
    seeds = [VoxelIndex(*map(int, s)) for s in seeds]
    if not seeds:
        raise SeedError("at least one seed is required")
    for s in seeds:
        if not s.inside(dims):
            raise SeedError(f"seed {tuple(s)} lies outside volume {dims.shape}")
        if boundary is not None and boundary[tuple(s)]:
            raise SeedError(f"seed {tuple(s)} lies on the boundary (B = 1)")
    return seeds


def grow_binary(b, seeds, connectivity: int = 6) -> BinaryVolume:
    """Zeros of ``b`` connected to any seed without crossing a one."""
    bits = np.asarray(b, dtype=bool)
    seeds = validate_seeds(seeds, Dims.of(bits.shape), bits)
    labels, _ = ndimage.label(~bits, structure=_structure(connectivity))
    keep = np.unique([labels[tuple(s)] for s in seeds])
    return BinaryVolume(np.isin(labels, keep))


def leakage_fraction(body) -> float:
    """Fraction of the volume's outer-face voxels covered by ``body``."""
    bits = np.asarray(body, dtype=bool)
    face = np.zeros(bits.shape, dtype=bool)
    for axis in range(3):
        index = [slice(None)] * 3
        index[axis] = 0
        face[tuple(index)] = True
        index[axis] = -1
        face[tuple(index)] = True
    return float(bits[face].mean())


def frontier(labeling, connectivity: int = 26) -> set[VoxelIndex]:
    """Unallocated voxels with at least one allocated neighbour."""
    labels = np.asarray(getattr(labeling, "labels", labeling))
    allocated = labels > 0
    touched = ndimage.binary_dilation(allocated, structure=_structure(connectivity))
    return {VoxelIndex(*map(int, v)) for v in np.argwhere(touched & ~allocated)}


def grow_intensity(volume, seeds, connectivity: int = 26, tolerance: float = np.inf) -> RegionLabeling:
    """Seeded region growing on intensities.

    At every step the unallocated voxel adjacent to a region whose value is
    closest to that region's running mean is allocated to it.  Ties go to
    the lowest linear voxel index (then the lowest region).  Growth stops
    once the smallest difference exceeds ``tolerance``.

    Every step rescans the frontier, so cost is O(voxels x frontier); meant
    for modest volumes.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    values = np.asarray(volume, dtype=np.float64)
    shape = values.shape
    seeds = validate_seeds(seeds, Dims.of(shape))
    flat = values.ravel()
    labels = np.zeros(flat.size, dtype=np.int32)
    sums, counts = [0.0], [0]
    for region, s in enumerate(seeds, 1):
        idx = np.ravel_multi_index(tuple(s), shape)
        if labels[idx]:
            raise SeedError(f"seed {tuple(s)} given twice")
        labels[idx] = region
        sums.append(float(flat[idx]))
        counts.append(1)

    offsets = np.array(neighbor_offsets(connectivity))
    coords = np.array(np.unravel_index(np.arange(flat.size), shape)).T

    def adjacent(idx):
        pts = coords[idx] + offsets
        ok = np.all((pts >= 0) & (pts < shape), axis=1)
        return np.ravel_multi_index(tuple(pts[ok].T), shape)

    # candidate (voxel, region) pairs on the frontier
    pairs: set[tuple[int, int]] = set()

    def add_neighbours(idx, region):
        for j in adjacent(idx):
            if labels[j] == 0:
                pairs.add((int(j), region))

    for region, s in enumerate(seeds, 1):
        add_neighbours(np.ravel_multi_index(tuple(s), shape), region)

    while pairs:
        cand = np.array(sorted(pairs))
        means = np.array(sums)[cand[:, 1]] / np.array(counts)[cand[:, 1]]
        delta = np.abs(flat[cand[:, 0]] - means)
        best = int(np.argmin(delta))  # sorted order gives the index/region tie-break
        if delta[best] > tolerance:
            break
        idx, region = (int(x) for x in cand[best])
        labels[idx] = region
        sums[region] += float(flat[idx])
        counts[region] += 1
        pairs = {p for p in pairs if p[0] != idx}
        add_neighbours(idx, region)

    return RegionLabeling(labels.reshape(shape))
