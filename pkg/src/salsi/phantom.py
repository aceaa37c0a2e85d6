"""Synthetic salt-dome volumes with analytic ground truth.

The dome is a half-ellipsoid standing on the bottom of the volume.  Outside
it the section shows horizontal sinusoidal layering; inside it a weak random
texture; along its flank a strong reflection wavelet.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .morphology import slice_polyline
from .volume import BinaryVolume, Dims, SeismicVolume

__all__ = ["PhantomSpec", "Phantom", "generate_phantom", "default_seed", "half_ellipsoid_mask"]


@dataclass(frozen=True)
class PhantomSpec:
    """Phantom geometry and texture.

    ``center`` is given as fractions of ``dim - 1`` per axis ``(m, n, k)``;
    the default puts the dome base on the bottom face.  ``semi_axes`` are in
    voxels.  ``noise`` is the standard deviation of additive Gaussian noise
    relative to the unit background amplitude.
    """

    dims: Dims = field(default_factory=lambda: Dims(64, 64, 32))
    center: tuple[float, float, float] = (1.0, 0.5, 0.5)
    semi_axes: tuple[float, float, float] = (48.0, 24.0, 13.0)
    layer_period: float = 12.0
    noise: float = 0.0
    seed: int = 0
    texture: float = 0.1
    band: float = 6.0
    band_width: float = 6.0

    def __post_init__(self):
        if not isinstance(self.dims, Dims):
            object.__setattr__(self, "dims", Dims.of(self.dims))
        if self.layer_period <= 0:
            raise ValueError("layer period must be positive")
        if any(a <= 0 for a in self.semi_axes):
            raise ValueError(f"semi-axes must be positive, got {self.semi_axes}")
        if not 0 <= self.noise < 1:
            raise ValueError(f"noise amplitude must lie in [0, 1), got {self.noise}")
        for axis, (c, a, size) in enumerate(zip(self.center_voxels, self.semi_axes, self.dims.shape)):
            low = c - a
            high = c if axis == 0 else c + a
            if low < 0 or high > size - 1:
                raise ValueError(
                    f"dome exceeds the volume along axis {'mnk'[axis]}: "
                    f"spans [{low:g}, {high:g}] in a grid of {size}"
                )

    @classmethod
    def scaled(cls, dims, **kwargs) -> "PhantomSpec":
        """Default geometry with the semi-axes scaled to a ``dims`` grid."""
        dims = Dims.of(dims)
        base = cls()
        ratio = [(new - 1) / (old - 1) for new, old in zip(dims.shape, base.dims.shape)]
        axes = tuple(a * r for a, r in zip(base.semi_axes, ratio))
        return cls(dims=dims, semi_axes=axes, **kwargs)

    @property
    def center_voxels(self) -> tuple[float, float, float]:
        return tuple(f * (s - 1) for f, s in zip(self.center, self.dims.shape))


class Phantom(NamedTuple):
    volume: SeismicVolume
    mask: BinaryVolume
    polylines: dict


def _grids(spec: PhantomSpec):
    return np.meshgrid(*(np.arange(s, dtype=np.float64) for s in spec.dims.shape), indexing="ij")


def half_ellipsoid_mask(spec: PhantomSpec) -> np.ndarray:
    grids = _grids(spec)
    rho2 = sum(((g - c) / a) ** 2 for g, c, a in zip(grids, spec.center_voxels, spec.semi_axes))
    return (rho2 <= 1.0) & (grids[0] <= spec.center_voxels[0])


def _flank_wavelet(dist, width):
    # a short oscillation of period 3 voxels, tapered to zero at both ends of the band
    taper = np.sin(np.pi * np.clip(dist / width, 0.0, 1.0))
    return np.sin(2.0 * np.pi * dist / 3.0 + np.pi / 4) * taper


def generate_phantom(spec: PhantomSpec = PhantomSpec()) -> Phantom:
    rng = np.random.default_rng(spec.seed)
    grids = _grids(spec)
    center = spec.center_voxels
    rel = [(g - c) / a for g, c, a in zip(grids, center, spec.semi_axes)]
    rho = np.sqrt(sum(r * r for r in rel))
    inside = half_ellipsoid_mask(spec)

    # approximate distance outside the surface: (rho - 1) / |grad rho|
    grad = np.sqrt(sum((r / a) ** 2 for r, a in zip(rel, spec.semi_axes)))
    with np.errstate(divide="ignore", invalid="ignore"):
        dist = np.where(rho > 0, (rho - 1.0) * rho / grad, -np.inf)

    m = grids[0]
    background = np.cos(2.0 * np.pi * m / spec.layer_period)
    texture = spec.texture * rng.standard_normal(spec.dims.shape)
    band = np.where((dist > 0) & (dist <= spec.band_width), spec.band * _flank_wavelet(dist, spec.band_width), 0.0)

    samples = np.where(inside, texture, background + band)
    if spec.noise > 0:
        samples = samples + spec.noise * rng.standard_normal(spec.dims.shape)

    polylines = {}
    for k in range(spec.dims.k):
        line = slice_polyline(inside[:, :, k], inline=k)
        if line is not None:
            polylines[k] = line

    meta = {"start_ms": 1300.0, "step_ms": 4.0}
    return Phantom(SeismicVolume(samples, meta), BinaryVolume(inside), polylines)


def default_seed(spec: PhantomSpec = PhantomSpec(), window: int = 3) -> tuple[int, int, int]:
    """A voxel deep inside the dome, placed at the centre of a saliency tile."""
    cm, cn, ck = spec.center_voxels
    target = (cm - 0.5 * spec.semi_axes[0], cn, ck)
    seed = []
    for value, size in zip(target, spec.dims.shape):
        tile = min(int(value) // window, size // window - 1)
        seed.append(tile * window + window // 2)
    return tuple(seed)
