"""Spectral saliency of a seismic volume.

Each local ``L x L x L`` cube is transformed with a normalised 3D DFT.  The
spectrum is split into a component weighted by the frequency along the
"temporal" axis and a component weighted by the frequency across the other
two axes.  The mean magnitude of each component gives two energy fields,
which are turned into saliency by a center-surround contrast and averaged.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "SaliencyParams",
    "EnergyField",
    "SaliencyMap",
    "dft3",
    "decomposition_weights",
    "decompose",
    "spectral_energy",
    "center_surround",
    "fuse",
    "compute_saliency",
]


@dataclass(frozen=True)
class SaliencyParams:
    """Parameters of the saliency stage.

    ``temporal_axis`` selects which volume axis plays the role of time in
    the spectral split (0 = m, 1 = n, 2 = k).

    ``surround_grid`` controls where the center-surround contrast is taken
    in tile mode: ``"tile"`` compares each tile with its neighbouring tiles
    and spreads the result over the tile; ``"voxel"`` compares voxels of the
    replicated energy field directly.  Sliding windows always use voxels.
    """

    window: int = 3
    tiling: str = "tile"
    surround_radius: int = 1
    weights: tuple[float, float] = (0.5, 0.5)
    temporal_axis: int = 2
    surround_grid: str = "tile"

    def __post_init__(self):
        if self.window < 2:
            raise ValueError(f"window side must be >= 2, got {self.window}")
        if self.tiling not in ("tile", "slide"):
            raise ValueError(f"tiling must be 'tile' or 'slide', got {self.tiling!r}")
        if self.surround_radius < 1:
            raise ValueError("surround radius must be >= 1")
        w_t, w_s = self.weights
        if w_t < 0 or w_s < 0 or abs(w_t + w_s - 1.0) > 1e-12:
            raise ValueError(f"fusion weights must be non-negative and sum to 1, got {self.weights}")
        if self.temporal_axis not in (0, 1, 2):
            raise ValueError("temporal_axis must be 0, 1 or 2")
        if self.surround_grid not in ("tile", "voxel"):
            raise ValueError(f"surround_grid must be 'tile' or 'voxel', got {self.surround_grid!r}")


@dataclass(frozen=True)
class EnergyField:
    e_t: np.ndarray
    e_s: np.ndarray


@dataclass(frozen=True)
class SaliencyMap:
    s_t: np.ndarray
    s_s: np.ndarray
    s: np.ndarray
    normalized: bool = False

    def __array__(self, dtype=None, copy=None):
        return self.s if dtype is None else self.s.astype(dtype)

    @property
    def shape(self):
        return self.s.shape


def dft3(window) -> np.ndarray:
    """Normalised 3D DFT of a cubic block (coefficients scaled by 1/L^3)."""
    block = np.asarray(window, dtype=np.float64)
    if block.ndim != 3 or len(set(block.shape)) != 1:
        raise ValueError(f"expected a cubic block, got shape {block.shape}")
    return np.fft.fftn(block) / block.size


def _signed_freq(side: int) -> np.ndarray:
    j = np.arange(side)
    return np.abs(np.where(j <= side // 2, j, j - side)).astype(np.float64)


def decomposition_weights(side: int, temporal_axis: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Temporal and spatial weights on an ``side**3`` frequency grid.

    Indices are folded to their signed alias before weighting, so bin ``j``
    and its conjugate ``side - j`` get equal weight.  The DC bin gets zero
    in both grids.
    """
    f = _signed_freq(side)
    grids = np.meshgrid(f, f, f, indexing="ij")
    radius = np.sqrt(sum(g * g for g in grids))
    temporal = grids[temporal_axis]
    spatial = np.sqrt(sum(g * g for i, g in enumerate(grids) if i != temporal_axis))
    with np.errstate(invalid="ignore", divide="ignore"):
        w_t = np.where(radius > 0, temporal / radius, 0.0)
        w_s = np.where(radius > 0, spatial / radius, 0.0)
    return w_t, w_s


def decompose(cube, temporal_axis: int = 2) -> tuple[np.ndarray, np.ndarray]:
    cube = np.asarray(cube)
    w_t, w_s = decomposition_weights(cube.shape[0], temporal_axis)
    return cube * w_t, cube * w_s


def _window_energies(blocks: np.ndarray, w_t: np.ndarray, w_s: np.ndarray):
    # blocks: (..., L, L, L) real windows -> two (...) energy arrays
    side = blocks.shape[-1]
    n = side ** 3
    # the DC bin carries zero weight; removing the mean first makes flat windows exactly zero
    blocks = blocks - blocks.mean(axis=(-3, -2, -1), keepdims=True)
    spec = np.abs(np.fft.fftn(blocks, axes=(-3, -2, -1))) / n
    spec = np.ascontiguousarray(spec).reshape(-1, n)
    e_t = (spec * w_t.ravel()).sum(axis=-1) / n
    e_s = (spec * w_s.ravel()).sum(axis=-1) / n
    lead = blocks.shape[:-3]
    return e_t.reshape(lead), e_s.reshape(lead)


def _run_chunks(func, chunks, threads):
    # chunking is fixed by the volume shape, never by the thread count
    if threads and threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, chunks))
    return [func(c) for c in chunks]


def _chunk_bounds(total: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, total))
    edges = np.linspace(0, total, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _tile_grid(vol, side, w_t, w_s, threads):
    """Energies of the complete tiles, one value per tile."""
    m, n, k = vol.shape
    a, b, c = m // side, n // side, k // side
    trimmed = vol[: a * side, : b * side, : c * side]
    tiles = trimmed.reshape(a, side, b, side, c, side).transpose(0, 2, 4, 1, 3, 5)

    def work(bounds):
        lo, hi = bounds
        return _window_energies(tiles[:, :, lo:hi], w_t, w_s)

    parts = _run_chunks(work, _chunk_bounds(c, c), threads)
    e_t = np.concatenate([p[0] for p in parts], axis=2)
    e_s = np.concatenate([p[1] for p in parts], axis=2)
    return e_t, e_s


def _expand(grid, side, shape):
    """Replicate tile values over their voxels; leftover edge voxels copy the nearest tile."""
    full = grid
    for axis in range(3):
        full = np.repeat(full, side, axis=axis)
    pad = [(0, size - full.shape[axis]) for axis, size in enumerate(shape)]
    return np.pad(full, pad, mode="edge")


def _slide_energy(vol, side, w_t, w_s, threads):
    m, n, k = vol.shape
    windows = sliding_window_view(vol, (side, side, side))
    n_starts = windows.shape[2]

    def work(bounds):
        lo, hi = bounds
        return _window_energies(windows[:, :, lo:hi], w_t, w_s)

    parts = _run_chunks(work, _chunk_bounds(n_starts, n_starts), threads)
    e_t = np.concatenate([p[0] for p in parts], axis=2)
    e_s = np.concatenate([p[1] for p in parts], axis=2)

    # voxel v uses the window centred on it, shifted inwards at the volume edges
    idx = [np.clip(np.arange(d) - side // 2, 0, d - side) for d in (m, n, k)]
    pick = np.ix_(*idx)
    return e_t[pick], e_s[pick]


def spectral_energy(volume, params: SaliencyParams = SaliencyParams(), threads: int = 1) -> EnergyField:
    vol = np.asarray(volume, dtype=np.float64)
    side = params.window
    if vol.ndim != 3 or min(vol.shape) < side:
        raise ValueError(f"volume of shape {vol.shape} is smaller than the {side}^3 window")
    w_t, w_s = decomposition_weights(side, params.temporal_axis)
    if params.tiling == "tile":
        e_t, e_s = (_expand(g, side, vol.shape) for g in _tile_grid(vol, side, w_t, w_s, threads))
    else:
        e_t, e_s = _slide_energy(vol, side, w_t, w_s, threads)
    return EnergyField(e_t, e_s)


def _surround_offsets(radius: int):
    rng = range(-radius, radius + 1)
    return [d for d in itertools.product(rng, rng, rng) if d != (0, 0, 0)]


def _shift_slices(offset, shape):
    """Slices pairing each voxel with the voxel ``offset`` away from it."""
    center, other = [], []
    for d, size in zip(offset, shape):
        center.append(slice(max(0, -d), size - max(0, d)))
        other.append(slice(max(0, d), size - max(0, -d)))
    return tuple(center), tuple(other)


def _contrast(energy: np.ndarray, radius: int) -> np.ndarray:
    total = np.zeros_like(energy)
    count = np.zeros(energy.shape, dtype=np.int32)
    for offset in _surround_offsets(radius):
        c, o = _shift_slices(offset, energy.shape)
        total[c] += np.abs(energy[c] - energy[o])
        count[c] += 1
    return total / np.maximum(count, 1)


def center_surround(field: EnergyField, params: SaliencyParams = SaliencyParams()):
    """Mean absolute contrast of each voxel against its in-bounds surround."""
    return _contrast(field.e_t, params.surround_radius), _contrast(field.e_s, params.surround_radius)


def fuse(s_t, s_s, weights=(0.5, 0.5), normalize: bool = False) -> SaliencyMap:
    s_t = np.asarray(s_t, dtype=np.float64)
    s_s = np.asarray(s_s, dtype=np.float64)
    if s_t.shape != s_s.shape:
        raise ValueError(f"shape mismatch: {s_t.shape} vs {s_s.shape}")
    w_t, w_s = weights
    s = w_t * s_t + w_s * s_s
    if normalize:
        peak = s.max(initial=0.0)
        if peak > 0:
            s = s / peak
    return SaliencyMap(s_t, s_s, s, normalized=normalize)


def compute_saliency(volume, params: SaliencyParams = SaliencyParams(), threads: int = 1) -> SaliencyMap:
    """Fused saliency map with the same shape as ``volume``."""
    if params.tiling == "tile" and params.surround_grid == "tile":
        vol = np.asarray(volume, dtype=np.float64)
        side = params.window
        if vol.ndim != 3 or min(vol.shape) < side:
            raise ValueError(f"volume of shape {vol.shape} is smaller than the {side}^3 window")
        w_t, w_s = decomposition_weights(side, params.temporal_axis)
        field = EnergyField(*_tile_grid(vol, side, w_t, w_s, threads))
        s_t, s_s = (_expand(g, side, vol.shape) for g in center_surround(field, params))
    else:
        field = spectral_energy(volume, params, threads=threads)
        s_t, s_s = center_surround(field, params)
    return fuse(s_t, s_s, params.weights)
