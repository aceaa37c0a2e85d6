# # Saliency modes and what they do to the result
#
# The contrast step can run on the tile lattice (the default) or voxel by
# voxel.  Energies can come from fixed tiles or from a window centred on
# every voxel.  This script runs the whole pipeline on the same phantom for
# each choice and compares the pixel and curve scores.

import tempfile

from salsi import PhantomSpec, RunConfig, default_seed, generate_phantom, run_pipeline
from salsi.morphology import write_polylines
from salsi.volume import save_mask

spec = PhantomSpec()
phantom = generate_phantom(spec)
work = tempfile.mkdtemp(prefix="salsi_demo_")
write_polylines(phantom.polylines, f"{work}/ref.csv")
save_mask(phantom.mask, f"{work}/ref.u8", f"{work}/ref.hdr")

modes = [
    ("tile energy, tile contrast", dict(tiling="tile", surround_grid="tile")),
    ("tile energy, voxel contrast", dict(tiling="tile", surround_grid="voxel")),
    ("sliding window", dict(tiling="slide")),
]

print(f"{'mode':30s} {'accuracy':>8s} {'F':>6s} {'SalSIM':>7s} {'leakage':>8s}")
for i, (name, options) in enumerate(modes):
    config = RunConfig(
        out=f"{work}/run{i}",
        seeds=[default_seed(spec)],
        reference_polylines=f"{work}/ref.csv",
        reference_mask=f"{work}/ref.u8",
        **options,
    )
    result = run_pipeline(config, phantom.volume)
    r = result.report
    print(f"{name:30s} {r.mean('accuracy'):8.4f} {r.mean('f_score'):6.3f} {r.mean('salsim'):7.4f} {result.leakage:8.3f}")

# Voxel-level contrast leaves gaps in the boundary band, so growth escapes
# into the background and the leakage fraction approaches one.
