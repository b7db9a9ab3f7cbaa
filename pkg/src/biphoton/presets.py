"""Built-in experiment presets.

Each preset is a complete config document; `biphoton run --preset NAME`
is equivalent to running the same document from a file.
"""

import math

# ternary idler phases (0, pi/4, pi/2) on three equal sectors; equal 0 and
# pi/2 areas keep the idler's cos(2 Phi_B) moment at zero, so the signal
# singles stay pattern-free
TERNARY_IDLER_LEVELS = [
    [0.0, 2 * math.pi / 3, 0.0],
    [2 * math.pi / 3, 4 * math.pi / 3, math.pi / 4],
    [4 * math.pi / 3, 2 * math.pi, math.pi / 2],
]

# four alternating sectors with a binary (0, pi/2) phase
QUADRANT_SIGNAL_LEVELS = [
    [0.0, math.pi / 2, 0.0],
    [math.pi / 2, math.pi, math.pi / 2],
    [math.pi, 3 * math.pi / 2, 0.0],
    [3 * math.pi / 2, 2 * math.pi, math.pi / 2],
]

PRESETS = {
    # heralded scan of the charge-2 pair: doughnut singles, four-lobed
    # coincidence images rotating with the mask, diagonal-fringe maps
    "oam-scan": {
        "kind": "scan",
        "label": "oam-scan",
        "state": {
            "envelope_a": {"kind": "ring", "waist": 1.0, "index": 2},
            "envelope_b": {"kind": "ring", "waist": 1.0, "index": 2},
            "mask_a": {"kind": "helical", "charge": 2},
            "mask_b": {"kind": "helical", "charge": 2},
            "sign": 1,
            "visibility": 1.0,
        },
        "scan": {
            "mask_width": math.pi / 4,
            "angles": 24,
            "heralds_per_angle": 20000,
            "phi_bins": 120,
            # the four showcased orientations: pi/4, pi/6, pi/12, 0
            "showcase_angles": [0, 1, 2, 3],
        },
        "singles_events": 1_000_000,
        "seed": 20260810,
    },
    # fringe-count and slope-sign table over charge combinations and signs
    "oam-sweep": {
        "kind": "sweep",
        "label": "oam-sweep",
        "sweep": {
            "charges": [1, 2, 3],
            "signs": [1, -1],
            "mask_width": math.pi / 4,
            "angles": 16,
            "heralds_per_angle": 20000,
            "phi_bins": 120,
            "visibility": 1.0,
        },
        "seed": 20260810,
    },
    # binary quadrant phase scanned through destructive/uniform/constructive
    "patterned": {
        "kind": "patterned",
        "label": "patterned",
        "state": {
            "envelope_a": {"kind": "gaussian", "waist": 1.0},
            "envelope_b": {"kind": "gaussian", "waist": 1.0},
            "mask_a": {"kind": "sector", "levels": QUADRANT_SIGNAL_LEVELS},
            "mask_b": {"kind": "sector", "levels": TERNARY_IDLER_LEVELS},
            "sign": 1,
            "visibility": 1.0,
        },
        "patterned": {"mask_width": math.pi / 4, "events_per_scan": 1_000_000},
        "singles_events": 1_000_000,
        "seed": 20260810,
    },
    # same workflow with a block-letter bitmap on the signal arm
    "patterned-letter": {
        "kind": "patterned",
        "label": "patterned-letter",
        "state": {
            "envelope_a": {"kind": "gaussian", "waist": 1.0},
            "envelope_b": {"kind": "gaussian", "waist": 1.0},
            "mask_a": {"kind": "bitmap", "raster": "letter-n",
                       "phase_hi": math.pi / 2, "phase_lo": 0.0, "half_width": 1.2},
            "mask_b": {"kind": "sector", "levels": TERNARY_IDLER_LEVELS},
            "sign": 1,
            "visibility": 1.0,
        },
        "patterned": {"mask_width": math.pi / 4, "events_per_scan": 1_000_000},
        "singles_events": 1_000_000,
        "seed": 20260810,
    },
}


def preset_config(name: str) -> dict:
    import copy

    if name not in PRESETS:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        )
    return copy.deepcopy(PRESETS[name])
