# # Delineating a synthetic salt dome, stage by stage
#
# This walkthrough builds a synthetic dome, runs each pipeline stage by hand
# and prints what every stage produces.  Run it with `python3 demos/01_phantom_walkthrough.py`.

import numpy as np

from salsi import (
    PhantomSpec,
    apply_threshold,
    build_histogram,
    compute_saliency,
    default_seed,
    dilate,
    extract_polylines,
    generate_phantom,
    grow_binary,
    otsu_threshold,
    perimeter,
)

# ## The phantom
#
# Outside the dome the volume holds flat layers plus a short wavelet band
# along the flank.  Inside it holds weak random texture.  The dome base sits
# on the bottom face of the volume.

spec = PhantomSpec()
phantom = generate_phantom(spec)
print("volume", phantom.volume.dims.shape, "salt voxels", phantom.mask.count())

# ## Saliency
#
# Each 3x3x3 tile gets a temporal and a spatial spectral energy.  The
# center-surround step then compares every tile with its neighbours, and the
# two channels are fused into one map.

sal = compute_saliency(phantom.volume)
s = sal.s.astype(np.float32)
inside = phantom.mask.bits
print(f"mean saliency inside {s[inside].mean():.4f}, outside {s[~inside].mean():.4f}")

# ## Binarisation
#
# Otsu picks the histogram split with the largest between-class variance.

otsu = otsu_threshold(build_histogram(s))
b = apply_threshold(s, otsu.value)
print(f"threshold {otsu.value:.4f} (bin {otsu.t}); {b.count()} boundary voxels")

# ## Region growing from an interior seed

seed = default_seed(spec)
sd = grow_binary(b, [seed])
print("seed", seed, "grown body", sd.count(), "voxels")

# ## Post-processing
#
# Dilation closes the gap left by the boundary band.  The perimeter of the
# dilated body is then traced one inline at a time.

sd_d = dilate(sd)
sd_b = perimeter(sd_d)
lines = extract_polylines(sd_b)
k = spec.dims.k // 2
print(f"{len(lines)} inline curves; inline {k} has {len(lines[k])} points, {lines[k].fragments} fragment(s)")

# ## A quick look at the middle inline
#
# '#' marks the traced curve and '.' the true salt.

section = np.full(inside[:, :, k].shape, " ")
section[inside[:, :, k]] = "."
for n, m in lines[k].points.astype(int):
    section[m, n] = "#"
for row in section[::2, ::1]:
    print("".join(row))
