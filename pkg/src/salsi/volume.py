"""Volume data model, raw-file I/O and voxel neighbourhoods.

Volumes are held in memory as numpy arrays of shape ``(m, n, k)``
(time/depth, crossline, inline).  On disk the samples are written with
``m`` varying fastest, then ``n``, then ``k``, so a single inline section
is one contiguous slab of the data file.
"""
from __future__ import annotations

import ast
import itertools
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Dims",
    "VoxelIndex",
    "SeismicVolume",
    "BinaryVolume",
    "VolumeFormatError",
    "read_header",
    "load_volume",
    "save_volume",
    "load_mask",
    "save_mask",
    "neighbors",
    "neighbor_offsets",
]

_DTYPES = {"f32le": np.dtype("<f4"), "u8": np.dtype("u1")}
_META_KEYS = ("start_ms", "step_ms", "inline_origin", "crossline_origin")


class VolumeFormatError(ValueError):
    """Raised when a header or data file does not describe a valid volume."""


@dataclass(frozen=True)
class Dims:
    m: int
    n: int
    k: int

    def __post_init__(self):
        for name in ("m", "n", "k"):
            value = getattr(self, name)
            if int(value) != value or value <= 0:
                raise ValueError(f"dimension {name} must be a positive integer, got {value!r}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.m, self.n, self.k)

    @property
    def size(self) -> int:
        return self.m * self.n * self.k

    @classmethod
    def of(cls, shape) -> "Dims":
        if isinstance(shape, Dims):
            return shape
        m, n, k = (int(s) for s in shape)
        return cls(m, n, k)


@dataclass(frozen=True)
class VoxelIndex:
    m: int
    n: int
    k: int

    def __iter__(self):
        return iter((self.m, self.n, self.k))

    def inside(self, dims: Dims) -> bool:
        return 0 <= self.m < dims.m and 0 <= self.n < dims.n and 0 <= self.k < dims.k

    def validate(self, dims: Dims) -> "VoxelIndex":
        if not self.inside(dims):
            raise IndexError(f"voxel {tuple(self)} outside volume of size {dims.shape}")
        return self


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SeismicVolume:
    """Dense amplitude grid indexed ``[m, n, k]``.

    The sample array is stored read-only; derive new volumes instead of
    mutating one in place.
    """

    samples: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float32, copy=True)
        if samples.ndim != 3:
            raise ValueError(f"expected a 3D array, got shape {samples.shape}")
        Dims.of(samples.shape)
        bad = np.argwhere(~np.isfinite(samples))
        if len(bad):
            raise VolumeFormatError(f"non-finite sample at voxel {tuple(int(i) for i in bad[0])}")
        object.__setattr__(self, "samples", _readonly(samples))
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def dims(self) -> Dims:
        return Dims.of(self.samples.shape)

    def __array__(self, dtype=None, copy=None):
        return self.samples if dtype is None else self.samples.astype(dtype)

    def inline(self, k: int) -> np.ndarray:
        """Return the ``(m, n)`` section at inline index ``k``."""
        return self.samples[:, :, k]


@dataclass(frozen=True)
class BinaryVolume:
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 3:
            raise ValueError(f"expected a 3D array, got shape {bits.shape}")
        if bits.dtype != bool:
            if not np.isin(bits, (0, 1)).all():
                raise ValueError("binary volume may only contain 0 and 1")
        object.__setattr__(self, "bits", _readonly(bits.astype(bool, copy=True)))

    @property
    def dims(self) -> Dims:
        return Dims.of(self.bits.shape)

    def __array__(self, dtype=None, copy=None):
        return self.bits if dtype is None else self.bits.astype(dtype)

    def count(self) -> int:
        return int(self.bits.sum())


# --------------------------------------------------------------------------
# header + raw data files
# --------------------------------------------------------------------------

def _write_header(path, dims: Dims, dtype: str, meta: dict):
    lines = [f"dims=[{dims.m},{dims.n},{dims.k}]", f"dtype={dtype}", "order=mnk"]
    for key in _META_KEYS:
        if meta.get(key) is not None:
            lines.append(f"{key}={meta[key]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _read_header(path) -> tuple[Dims, str, dict]:
    fields = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise VolumeFormatError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        fields[key] = value
    try:
        dims = Dims.of(ast.literal_eval(fields["dims"]))
    except KeyError:
        raise VolumeFormatError(f"{path}: header has no dims field") from None
    except (ValueError, SyntaxError, TypeError) as exc:
        raise VolumeFormatError(f"{path}: bad dims field {fields['dims']!r}") from exc
    dtype = fields.get("dtype")
    if dtype not in _DTYPES:
        raise VolumeFormatError(f"{path}: unsupported dtype {dtype!r}")
    if fields.get("order", "mnk") != "mnk":
        raise VolumeFormatError(f"{path}: unsupported sample order {fields['order']!r}")
    meta = {}
    for key in _META_KEYS:
        if key in fields:
            try:
                meta[key] = ast.literal_eval(fields[key])
            except (ValueError, SyntaxError) as exc:
                raise VolumeFormatError(f"{path}: bad value for {key}") from exc
    return dims, dtype, meta


def read_header(path) -> tuple[Dims, str, dict]:
    """Parse a header file into ``(dims, dtype, meta)``."""
    return _read_header(path)


def _read_raw(path_data, dims: Dims, dtype: str) -> np.ndarray:
    raw = np.fromfile(path_data, dtype=_DTYPES[dtype])
    if raw.size != dims.size:
        raise VolumeFormatError(
            f"{path_data}: expected {dims.size} samples for dims {dims.shape}, found {raw.size}"
        )
    return raw.reshape(dims.shape, order="F")


def _check_dest(path):
    if not str(path):
        raise OSError("empty destination path")


def load_volume(path_data, path_header) -> SeismicVolume:
    """Read a raw little-endian float32 volume and its text header."""
    dims, dtype, meta = _read_header(path_header)
    if dtype != "f32le":
        raise VolumeFormatError(f"{path_header}: amplitude volumes must be f32le, got {dtype}")
    return SeismicVolume(_read_raw(path_data, dims, dtype), meta)


def save_volume(volume, path_data, path_header, meta=None):
    """Write ``volume`` (a SeismicVolume or any 3D float array)."""
    _check_dest(path_data)
    _check_dest(path_header)
    if meta is None:
        meta = getattr(volume, "meta", {})
    samples = np.asarray(volume, dtype="<f4")
    dims = Dims.of(samples.shape)
    samples.ravel(order="F").tofile(os.fspath(path_data))
    _write_header(path_header, dims, "f32le", meta)


def load_mask(path_data, path_header) -> BinaryVolume:
    dims, dtype, _ = _read_header(path_header)
    if dtype != "u8":
        raise VolumeFormatError(f"{path_header}: masks must be u8, got {dtype}")
    bits = _read_raw(path_data, dims, dtype)
    if bits.max(initial=0) > 1:
        raise VolumeFormatError(f"{path_data}: mask contains values other than 0/1")
    return BinaryVolume(bits)


def save_mask(mask, path_data, path_header, meta=None):
    _check_dest(path_data)
    _check_dest(path_header)
    bits = np.asarray(mask).astype("u1")
    dims = Dims.of(bits.shape)
    bits.ravel(order="F").tofile(os.fspath(path_data))
    _write_header(path_header, dims, "u8", meta or {})


# --------------------------------------------------------------------------
# neighbourhoods
# --------------------------------------------------------------------------

def neighbor_offsets(connectivity: int = 26) -> list[tuple[int, int, int]]:
    """Offsets of the 6- or 26-neighbourhood, in lexicographic order."""
    if connectivity not in (6, 26):
        raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")
    offsets = [d for d in itertools.product((-1, 0, 1), repeat=3) if d != (0, 0, 0)]
    if connectivity == 6:
        offsets = [d for d in offsets if sum(map(abs, d)) == 1]
    return offsets


def neighbors(v, dims: Dims, connectivity: int = 26) -> set[VoxelIndex]:
    v = VoxelIndex(*v).validate(dims)
    out = set()
    for dm, dn, dk in neighbor_offsets(connectivity):
        w = VoxelIndex(v.m + dm, v.n + dn, v.k + dk)
        if w.inside(dims):
            out.add(w)
    return out
