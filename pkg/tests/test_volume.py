import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from salsi.volume import (
    BinaryVolume,
    Dims,
    SeismicVolume,
    VolumeFormatError,
    VoxelIndex,
    load_mask,
    load_volume,
    neighbors,
    read_header,
    save_mask,
    save_volume,
)

shapes = st.tuples(*(st.integers(1, 6),) * 3)


@given(arrays(np.float32, shapes, elements=st.floats(-1e6, 1e6, width=32)))
def test_round_trip_is_identity(tmp_path_factory, samples):
    d = tmp_path_factory.mktemp("rt")
    vol = SeismicVolume(samples, {"start_ms": 1300.0, "step_ms": 4.0})
    save_volume(vol, d / "v.f32", d / "v.hdr")
    back = load_volume(d / "v.f32", d / "v.hdr")
    assert back.dims == vol.dims
    assert np.array_equal(back.samples, vol.samples)
    assert back.meta == vol.meta


def test_header_carries_time_axis(tmp_path):
    vol = SeismicVolume(np.zeros((4, 3, 2)), {"start_ms": 1300.0, "step_ms": 4.0})
    save_volume(vol, tmp_path / "v.f32", tmp_path / "v.hdr")
    text = (tmp_path / "v.hdr").read_text()
    assert "start_ms=1300.0" in text and "step_ms=4.0" in text
    assert "dims=[4,3,2]" in text and "dtype=f32le" in text and "order=mnk" in text
    dims, dtype, meta = read_header(tmp_path / "v.hdr")
    assert dims == Dims(4, 3, 2) and dtype == "f32le" and meta["start_ms"] == 1300.0


def test_inline_is_contiguous_slab(tmp_path):
    samples = np.arange(4 * 3 * 2, dtype=np.float32).reshape(4, 3, 2)
    save_volume(samples, tmp_path / "v.f32", tmp_path / "v.hdr")
    raw = np.fromfile(tmp_path / "v.f32", dtype="<f4")
    # m fastest, then n: the first m*n values are inline k = 0
    assert np.array_equal(raw[:12], samples[:, :, 0].ravel(order="F"))
    assert raw[1] == samples[1, 0, 0]


def test_empty_destination_is_io_error():
    with pytest.raises(OSError):
        save_volume(np.zeros((2, 2, 2)), "", "x.hdr")


def test_size_mismatch_is_format_error(tmp_path):
    save_volume(np.zeros((2, 2, 2)), tmp_path / "v.f32", tmp_path / "v.hdr")
    (tmp_path / "v.hdr").write_text("dims=[3,2,2]\ndtype=f32le\norder=mnk\n")
    with pytest.raises(VolumeFormatError):
        load_volume(tmp_path / "v.f32", tmp_path / "v.hdr")


def test_missing_header_field(tmp_path):
    (tmp_path / "v.hdr").write_text("dtype=f32le\n")
    (tmp_path / "v.f32").write_bytes(b"")
    with pytest.raises(VolumeFormatError, match="dims"):
        load_volume(tmp_path / "v.f32", tmp_path / "v.hdr")


def test_non_finite_sample_rejected_with_index():
    samples = np.zeros((3, 3, 3))
    samples[1, 2, 0] = np.nan
    with pytest.raises(VolumeFormatError, match=r"\(1, 2, 0\)"):
        SeismicVolume(samples)


def test_samples_are_read_only():
    vol = SeismicVolume(np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        vol.samples[0, 0, 0] = 1


def test_mask_round_trip(tmp_path):
    bits = np.random.default_rng(0).random((5, 4, 3)) < 0.5
    save_mask(bits, tmp_path / "m.u8", tmp_path / "m.hdr")
    assert "dtype=u8" in (tmp_path / "m.hdr").read_text()
    assert np.array_equal(load_mask(tmp_path / "m.u8", tmp_path / "m.hdr").bits, bits)


def test_binary_volume_rejects_other_values():
    with pytest.raises(ValueError):
        BinaryVolume(np.full((2, 2, 2), 2))


def test_dims_must_be_positive():
    with pytest.raises(ValueError):
        Dims(0, 3, 3)


def test_neighbors_interior_and_corner():
    dims = Dims(5, 5, 5)
    assert len(neighbors((2, 2, 2), dims, 26)) == 26
    assert len(neighbors((0, 0, 0), dims, 26)) == 7
    assert len(neighbors((2, 2, 2), dims, 6)) == 6


def test_neighbors_out_of_bounds():
    with pytest.raises(IndexError):
        neighbors((5, 0, 0), Dims(5, 5, 5))


@given(shapes, st.data(), st.sampled_from([6, 26]))
def test_neighbors_match_enumeration(shape, data, connectivity):
    dims = Dims(*shape)
    v = tuple(data.draw(st.integers(0, s - 1)) for s in shape)
    got = neighbors(v, dims, connectivity)
    expected = set()
    for d in itertools.product((-1, 0, 1), repeat=3):
        if d == (0, 0, 0) or (connectivity == 6 and sum(map(abs, d)) != 1):
            continue
        w = tuple(v[i] + d[i] for i in range(3))
        if all(0 <= w[i] < shape[i] for i in range(3)):
            expected.add(VoxelIndex(*w))
    assert got == expected
    assert VoxelIndex(*v) not in got
