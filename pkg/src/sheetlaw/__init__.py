"""Numerical checks of identities in law for quadratic functionals of the
Brownian sheet, its bridges and Kiefer fields."""

__version__ = "0.1.0"

from .kernels import CenteringKind, CovKernel, Point2, ProcessKind, make_kernel  # noqa: E402
from .spectral import Spectrum  # noqa: E402

__all__ = ["CenteringKind", "CovKernel", "Point2", "ProcessKind", "Spectrum", "make_kernel", "__version__"]
