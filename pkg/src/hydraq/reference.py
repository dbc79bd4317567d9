"""Published benchmark values for the three model families.

They were measured on a proprietary clinical dataset, so they serve only as
side-by-side context in reports and are never compared against synthetic
results. ``None`` marks a model reported as failed on that task.
"""

from __future__ import annotations

# task -> model kind -> (R2, MAE, Acc_delta1, Acc_delta2, Acc_delta3)
REFERENCE_VALUES = {
    "usg": {
        "boosted": (0.91, 1.69, 0.41, 0.75, 0.80),
        "su_symmetric": (0.52, 4.57, 0.18, 0.29, 0.44),
        "qsm": (0.84, 2.35, 0.29, 0.54, 0.75),
    },
    "conductivity": {
        "boosted": (0.88, 1.74, 0.49, 0.69, 0.81),
        "su_symmetric": (0.49, 4.78, 0.16, 0.28, 0.42),
        "qsm": (0.67, 3.61, 0.14, 0.37, 0.48),
    },
    "volume": {
        "boosted": (0.90, 22.41, 0.66, 0.94, 0.96),
        "su_symmetric": None,
        "qsm": (0.89, 26.54, 0.61, 0.89, 0.95),
    },
}
