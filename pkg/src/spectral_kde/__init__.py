"""Spectral kernel and frame density estimators on compact spaces.

The spaces (circle, Jacobi interval, 2-sphere, SU(2)) expose their exact
Laplacian spectra, so kernels ``m(delta sqrt(L))``, tight frames and the
estimators built from them are finite eigen-sums evaluated without
discretisation error.
"""

__version__ = "0.1.0"

from .errors import FrameDepthError, GridError, NumericalError, SpectralBudgetError
from .geometry import (
    SU2,
    Circle,
    JacobiInterval,
    Net,
    QuadratureGrid,
    SpaceModel,
    Sphere2,
    make_space,
)
from .spectral import KernelExpansion, Multiplier, SpectralKernel
from .frames import Frame, FrameCoefficients, analyze, build_frame, synthesize
from .estimators import SampleSet, fit_kernel, fit_linear_wavelet, fit_threshold
from .sim import RandomStream, TestDensity, density_sample, make_density
from .risk import EstimatorRecipe, RiskReport, mc_risk, rate_experiment

__all__ = [
    "__version__",
    "Circle",
    "JacobiInterval",
    "Sphere2",
    "SU2",
    "SpaceModel",
    "Net",
    "QuadratureGrid",
    "make_space",
    "Multiplier",
    "SpectralKernel",
    "KernelExpansion",
    "Frame",
    "FrameCoefficients",
    "build_frame",
    "analyze",
    "synthesize",
    "SampleSet",
    "fit_kernel",
    "fit_linear_wavelet",
    "fit_threshold",
    "RandomStream",
    "TestDensity",
    "density_sample",
    "make_density",
    "EstimatorRecipe",
    "RiskReport",
    "mc_risk",
    "rate_experiment",
    "SpectralBudgetError",
    "GridError",
    "FrameDepthError",
    "NumericalError",
]
