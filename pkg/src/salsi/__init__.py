"""Salt-dome delineation in 3D seismic volumes from spectral saliency.

The workflow runs saliency, Otsu thresholding, seeded flood fill, dilation,
perimeter extraction and boundary tracing; see :mod:`salsi.pipeline`.
"""
from .binarize import apply_threshold, build_histogram, otsu_threshold
from .growing import grow_binary, grow_intensity
from .metrics import aggregate, curved, evaluate_inlines, frechet_distance, salsim
from .morphology import StructuringElement, dilate, extract_polylines, perimeter
from .phantom import PhantomSpec, default_seed, generate_phantom
from .pipeline import RunConfig, StageTimings, export_slice_image, render_report, run_pipeline
from .saliency import SaliencyParams, compute_saliency
from .volume import BinaryVolume, Dims, SeismicVolume, VoxelIndex, load_mask, load_volume, save_mask, save_volume

__version__ = "0.1.0"
