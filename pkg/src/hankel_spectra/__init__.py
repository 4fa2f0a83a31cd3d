from src.hankel_spectra.errors import (
    ConditioningError,
    ConvergenceError,
    DegenerateSpectrumError,
    DivergentIntegralError,
    EmptyMeasureError,
    HankelSpectraError,
    StructuralError,
)
from src.hankel_spectra.measures import AtomicMeasure, DensityMeasure, Measure
from src.hankel_spectra.spectral_map import omega, omega_sharp

__all__ = [
    "AtomicMeasure",
    "ConditioningError",
    "ConvergenceError",
    "DegenerateSpectrumError",
    "DensityMeasure",
    "DivergentIntegralError",
    "EmptyMeasureError",
    "HankelSpectraError",
    "Measure",
    "StructuralError",
    "omega",
    "omega_sharp",
]
