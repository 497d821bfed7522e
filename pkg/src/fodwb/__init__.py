"""Fiber orientation workbench.

Predicts order-10 FOD spherical-harmonic coefficients from order-8 signal
coefficients with a from-scratch MLP and compares it against constrained
spherical deconvolution on a multi-tensor phantom.
"""
__version__ = "0.1.0"

from ._backend import COMPILED
from .sh import SHCoeffs, GradientScheme

__all__ = ["COMPILED", "SHCoeffs", "GradientScheme", "__version__"]
