"""Differentially private image obfuscation primitives.

Thin re-export of the compiled extension: the mechanism (pixelisation,
colour quantisation, calibrated Laplace noise), its sensitivity constants,
and the feature/retrieval helpers used by the evaluation harness.
"""

from dpreid._core import (
    average_precision,
    dp_log_ratio_bound,
    hist_features,
    laplace_samples,
    load_ppm,
    obfuscate,
    pixelise,
    quantise,
    save_ppm,
    sensitivity,
)

__all__ = [
    "average_precision",
    "dp_log_ratio_bound",
    "hist_features",
    "laplace_samples",
    "load_ppm",
    "obfuscate",
    "pixelise",
    "quantise",
    "save_ppm",
    "sensitivity",
]
