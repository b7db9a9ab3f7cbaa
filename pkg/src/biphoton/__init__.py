"""biphoton: spatial pair-correlation simulator for patterned-phase
entangled photon pairs.

Prepares two-photon states whose joint density carries a programmable
interference pattern, simulates heralded coincidence imaging with sector
masks, and extracts the spatial second-order coherence function from the
resulting images. The hot sampling loop runs in a compiled extension when
available, with a numpy fallback selected at import.
"""

from .analysis import (
    Annulus,
    AzimuthalProfile,
    CoherenceMap,
    auto_annulus,
    azimuthal_profile,
    compare_to_analytic,
    extract_g2,
    fringe_count,
    fringe_slope_sign,
    g2_image,
    map_fringe_count,
    refold,
    scan_g2_matrix,
    unfold,
)
from .design import design_binary_mask, predict_levels, scanning_schedule
from .geometry import (
    AmplitudeEnvelope,
    BitmapPhase,
    Grid,
    HelicalPhase,
    PhaseMask,
    SectorPhase,
    bitmap_phase,
    conjugate,
    envelope_density,
    gaussian_envelope,
    helical_phase,
    letter_n_raster,
    ring_envelope,
    sector_phase,
)
from .kernels import BACKEND, COMPILED
from .measurement import (
    CoincidenceImage,
    DetectorConfig,
    SectorMask,
    herald_fraction,
    mask_average_contrast,
    merge_images,
    run_heralded_imaging,
    run_singles_imaging,
    sample_pair,
    sample_pairs,
)
from .states import (
    BiphotonState,
    DensityMap,
    analytic_g2,
    joint_density,
    make_state,
    marginal_density,
    oam_state,
    wpf_amplitude,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeEnvelope",
    "Annulus",
    "AzimuthalProfile",
    "BACKEND",
    "BiphotonState",
    "BitmapPhase",
    "CoherenceMap",
    "CoincidenceImage",
    "COMPILED",
    "DensityMap",
    "DetectorConfig",
    "Grid",
    "HelicalPhase",
    "PhaseMask",
    "SectorMask",
    "SectorPhase",
    "analytic_g2",
    "auto_annulus",
    "azimuthal_profile",
    "bitmap_phase",
    "compare_to_analytic",
    "conjugate",
    "design_binary_mask",
    "envelope_density",
    "extract_g2",
    "fringe_count",
    "fringe_slope_sign",
    "g2_image",
    "gaussian_envelope",
    "helical_phase",
    "herald_fraction",
    "joint_density",
    "letter_n_raster",
    "make_state",
    "map_fringe_count",
    "marginal_density",
    "mask_average_contrast",
    "merge_images",
    "oam_state",
    "predict_levels",
    "refold",
    "ring_envelope",
    "run_heralded_imaging",
    "run_singles_imaging",
    "sample_pair",
    "sample_pairs",
    "scan_g2_matrix",
    "scanning_schedule",
    "sector_phase",
    "unfold",
    "wpf_amplitude",
]
