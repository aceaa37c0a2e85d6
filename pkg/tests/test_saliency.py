import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import direct_dft3, direct_window_energy
from salsi.phantom import PhantomSpec, generate_phantom
from salsi.saliency import (
    EnergyField,
    SaliencyParams,
    center_surround,
    compute_saliency,
    decompose,
    decomposition_weights,
    dft3,
    fuse,
    spectral_energy,
)


def test_constant_block_spectrum():
    f = dft3(np.full((3, 3, 3), 2.5))
    assert abs(f[0, 0, 0] - 2.5) < 1e-12
    rest = np.abs(f).ravel()[1:]
    assert rest.max() < 1e-12


def test_impulse_spectrum_is_flat():
    block = np.zeros((3, 3, 3))
    block[0, 0, 0] = 1.0
    assert np.allclose(np.abs(dft3(block)), 1 / 27, atol=1e-15)


def test_random_block_matches_loop_oracle():
    block = np.random.default_rng(0).normal(size=(3, 3, 3))
    assert np.abs(dft3(block) - direct_dft3(block)).max() < 1e-9


def test_non_cubic_rejected():
    with pytest.raises(ValueError):
        dft3(np.zeros((3, 3, 4)))


def test_pure_temporal_bin():
    w_t, w_s = decomposition_weights(3, temporal_axis=2)
    assert w_t[0, 0, 1] == 1.0 and w_s[0, 0, 1] == 0.0
    assert w_t[0, 0, 0] == 0.0 and w_s[0, 0, 0] == 0.0


def test_signed_frequencies_give_conjugate_symmetric_weights():
    for side in (3, 4, 5):
        w_t, w_s = decomposition_weights(side)
        neg = (-np.arange(side)) % side
        assert np.array_equal(w_t, w_t[np.ix_(neg, neg, neg)])
        assert np.array_equal(w_s, w_s[np.ix_(neg, neg, neg)])


def test_decompose_weights_bins():
    cube = dft3(np.random.default_rng(1).normal(size=(4, 4, 4)))
    f_t, f_s = decompose(cube)
    non_dc = np.ones(cube.shape, dtype=bool)
    non_dc[0, 0, 0] = False
    assert np.allclose(np.abs(f_t[non_dc]) ** 2 + np.abs(f_s[non_dc]) ** 2, np.abs(cube[non_dc]) ** 2)
    assert f_t[0, 0, 0] == 0 and f_s[0, 0, 0] == 0


def test_constant_volume_energy_zero():
    e = spectral_energy(np.full((6, 6, 6), 7.0))
    assert not e.e_t.any() and not e.e_s.any()


def test_volume_varying_only_along_temporal_axis():
    # the temporal channel is bound to k by default; a signal in k alone has no spatial energy
    k = np.arange(6)
    vol = np.broadcast_to(np.sin(k * 1.3), (6, 6, 6)).copy()
    e = spectral_energy(vol, SaliencyParams(temporal_axis=2))
    assert np.abs(e.e_s).max() < 1e-12
    assert (e.e_t > 0).all()


def test_tile_energy_matches_per_tile_direct_sum():
    vol = np.random.default_rng(2).normal(size=(6, 6, 6))
    e = spectral_energy(vol, SaliencyParams(window=3, tiling="tile"))
    for a, b, c in itertools.product(range(2), repeat=3):
        block = vol[3 * a:3 * a + 3, 3 * b:3 * b + 3, 3 * c:3 * c + 3]
        ref_t, ref_s = direct_window_energy(block)
        tile = (slice(3 * a, 3 * a + 3), slice(3 * b, 3 * b + 3), slice(3 * c, 3 * c + 3))
        assert np.allclose(e.e_t[tile], ref_t, atol=1e-12)
        assert np.allclose(e.e_s[tile], ref_s, atol=1e-12)


def test_residual_voxels_take_nearest_tile():
    vol = np.random.default_rng(3).normal(size=(7, 8, 6))
    e = spectral_energy(vol, SaliencyParams(window=3))
    assert e.e_t.shape == vol.shape
    assert np.array_equal(e.e_t[6, :, :], e.e_t[5, :, :])
    assert np.array_equal(e.e_t[:, 6:, :], np.repeat(e.e_t[:, 5:6, :], 2, axis=1))


def test_slide_energy_uses_voxel_centred_window():
    vol = np.random.default_rng(4).normal(size=(6, 6, 6))
    e = spectral_energy(vol, SaliencyParams(tiling="slide"))
    ref_t, ref_s = direct_window_energy(vol[1:4, 2:5, 0:3])
    assert np.isclose(e.e_t[2, 3, 1], ref_t) and np.isclose(e.e_s[2, 3, 1], ref_s)
    # edge voxels use the window shifted inwards
    ref_t, _ = direct_window_energy(vol[0:3, 0:3, 3:6])
    assert np.isclose(e.e_t[0, 0, 5], ref_t)


def test_volume_smaller_than_window():
    with pytest.raises(ValueError):
        spectral_energy(np.zeros((2, 5, 5)))


def test_spike_contrast():
    e = np.zeros((5, 5, 5))
    e[2, 2, 2] = 2.6
    s_t, _ = center_surround(EnergyField(e, e))
    assert np.isclose(s_t[2, 2, 2], 2.6)
    assert np.isclose(s_t[1, 2, 2], 2.6 / 26)


def test_corner_divisor_is_seven():
    e = np.zeros((4, 4, 4))
    e[0, 0, 0] = 7.0
    s_t, _ = center_surround(EnergyField(e, e))
    assert np.isclose(s_t[0, 0, 0], 7.0)
    # a face-adjacent neighbour of the corner sees the spike among its 11 in-bounds neighbours
    assert np.isclose(s_t[1, 0, 0], 7.0 / 11)


def test_constant_energy_no_contrast():
    e = np.full((4, 5, 6), 3.0)
    s_t, s_s = center_surround(EnergyField(e, e))
    assert not s_t.any() and not s_s.any()


def test_fuse_examples():
    x = np.random.default_rng(5).random((3, 3, 3))
    assert np.array_equal(fuse(x, x).s, x)
    assert np.allclose(fuse(2 * x, np.zeros_like(x)).s, x)
    zero = fuse(np.zeros((2, 2, 2)), np.zeros((2, 2, 2)), normalize=True)
    assert not zero.s.any() and zero.normalized


def test_fuse_normalisation_peak_one():
    x = np.random.default_rng(6).random((3, 3, 3))
    assert fuse(x, x, normalize=True).s.max() == 1.0


def test_fuse_shape_mismatch():
    with pytest.raises(ValueError):
        fuse(np.zeros((2, 2, 2)), np.zeros((2, 2, 3)))


def test_params_validation():
    with pytest.raises(ValueError):
        SaliencyParams(window=1)
    with pytest.raises(ValueError):
        SaliencyParams(weights=(0.7, 0.7))
    with pytest.raises(ValueError):
        SaliencyParams(tiling="overlap")
    with pytest.raises(ValueError):
        SaliencyParams(surround_radius=0)


@pytest.mark.parametrize("params", [SaliencyParams(), SaliencyParams(surround_grid="voxel"), SaliencyParams(tiling="slide")])
def test_phantom_boundary_more_salient_than_background(params):
    spec = PhantomSpec()
    phantom = generate_phantom(spec)
    s = compute_saliency(phantom.volume, params).s
    mask = phantom.mask.bits
    from scipy import ndimage

    near = ndimage.binary_dilation(mask, iterations=3) & ~ndimage.binary_erosion(mask, iterations=3)
    far = ~ndimage.binary_dilation(mask, iterations=9)
    assert s[near].mean() > s[far].mean()


def test_output_shape_matches_input():
    vol = np.random.default_rng(7).normal(size=(10, 7, 8))
    for params in (SaliencyParams(), SaliencyParams(tiling="slide"), SaliencyParams(surround_grid="voxel")):
        assert compute_saliency(vol, params).s.shape == vol.shape


def test_thread_count_does_not_change_result():
    vol = np.random.default_rng(8).normal(size=(12, 9, 15))
    for params in (SaliencyParams(), SaliencyParams(tiling="slide")):
        ref = compute_saliency(vol, params, threads=1).s
        for threads in (2, 5):
            assert np.array_equal(compute_saliency(vol, params, threads=threads).s, ref)


volumes = arrays(np.float64, st.tuples(*(st.integers(3, 8),) * 3), elements=st.floats(-100, 100))
modes = st.sampled_from([SaliencyParams(), SaliencyParams(tiling="slide"), SaliencyParams(surround_grid="voxel")])


@given(volumes, modes)
def test_saliency_non_negative(vol, params):
    sal = compute_saliency(vol, params)
    for grid in (sal.s, sal.s_t, sal.s_s):
        assert np.isfinite(grid).all() and (grid >= 0).all()


@given(volumes, modes, st.floats(-50, 50))
def test_offset_invariance(vol, params, shift):
    a = compute_saliency(vol, params).s
    b = compute_saliency(vol + shift, params).s
    assert np.allclose(a, b, atol=1e-9 * (1 + np.abs(vol).max()))


@given(volumes, modes, st.floats(0, 20))
def test_scaling_covariance(vol, params, alpha):
    a = compute_saliency(vol, params).s
    b = compute_saliency(alpha * vol, params).s
    assert np.allclose(b, alpha * a, rtol=1e-9, atol=1e-9 * (1 + alpha * np.abs(vol).max()))
