"""Sampling kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback
is selected otherwise, or when BIPHOTON_PURE_PYTHON=1 is set. Both
expose the same functions (sample_pairs, heralded_image, singles_image)
over the same SamplerTables.
"""

import os

from .tables import SamplerTables, mask_params, phase_lookup, radius_quantile_table, sampler_tables

if os.environ.get("BIPHOTON_PURE_PYTHON", "") == "1":
    from . import pyref as impl
else:
    try:
        from . import _core as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pyref as impl

COMPILED = bool(getattr(impl, "COMPILED", False))
BACKEND = "compiled" if COMPILED else "python"

sample_pairs = impl.sample_pairs
heralded_image = impl.heralded_image
singles_image = impl.singles_image

__all__ = [
    "BACKEND",
    "COMPILED",
    "SamplerTables",
    "heralded_image",
    "mask_params",
    "phase_lookup",
    "radius_quantile_table",
    "sample_pairs",
    "sampler_tables",
    "singles_image",
]
