"""Magnetic frame flows, Landau levels and ergodic averages on hyperbolic surfaces."""

from magflow.errors import (
    FitError,
    IntegralityError,
    MagflowError,
    RangeError,
    ReductionError,
    RegimeError,
    SamplingError,
    StepOverflowError,
)
from magflow.flows import MagneticParams, Regime, classify
from magflow.fuchsian import FuchsianGroup, bolza_group
from magflow.sl2 import AlgebraElement, GroupElement

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement",
    "FitError",
    "FuchsianGroup",
    "GroupElement",
    "IntegralityError",
    "MagflowError",
    "MagneticParams",
    "RangeError",
    "ReductionError",
    "Regime",
    "RegimeError",
    "SamplingError",
    "StepOverflowError",
    "bolza_group",
    "classify",
]
