"""Spectral analysis of locally stationary time series.

Submodules: :mod:`~locspec.process` (tvARMA models and simulation),
:mod:`~locspec.spectral` (pre-periodogram and spectral means),
:mod:`~locspec.whittle` (Whittle fitting), :mod:`~locspec.verify`
(Monte Carlo experiments) and :mod:`~locspec.cli`.
"""

__version__ = "0.1.0"

from .curves import CoefficientCurve, CurveError
from .kernels import SmoothingKernel, TimeKernel
from .process import InvalidModelError, Sample, TvArmaModel, simulate, tv_spectral_density
from .spectral import FrequencyGrid, SpectralFunctional, Taper

__all__ = [
    "CoefficientCurve",
    "CurveError",
    "FrequencyGrid",
    "InvalidModelError",
    "Sample",
    "SmoothingKernel",
    "SpectralFunctional",
    "Taper",
    "TimeKernel",
    "TvArmaModel",
    "simulate",
    "tv_spectral_density",
]
