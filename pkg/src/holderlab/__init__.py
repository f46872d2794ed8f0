"""holderlab: parabolic regularity laboratory for stochastic convolutions."""

__version__ = "0.1.0"

from .kernels import KernelSpec, SpectralGrid, eval_kernel, check_sharp_bounds
from .noise import NoiseSpec, NoisePath, MarkLaw, JumpSpec, sample_path, compensated_integral
from .conditions import ConditionProbe, ConditionReport, fit_exponent
from .convolution import TestFunctionSpec, FieldEnsemble, convolve_brownian, convolve_poisson
from .moments import MomentField, estimate_pair_moments, sample_pairs
from .campanato import (
    SpaceTimePoint,
    ParabolicCylinder,
    DomainSpec,
    parabolic_distance,
    a_type_constant,
    campanato_seminorm,
    holder_seminorm,
    embedding_exponent,
    inclusion_holds,
)

__all__ = [
    "KernelSpec",
    "SpectralGrid",
    "eval_kernel",
    "check_sharp_bounds",
    "NoiseSpec",
    "NoisePath",
    "MarkLaw",
    "JumpSpec",
    "sample_path",
    "compensated_integral",
    "ConditionProbe",
    "ConditionReport",
    "fit_exponent",
    "TestFunctionSpec",
    "FieldEnsemble",
    "convolve_brownian",
    "convolve_poisson",
    "MomentField",
    "estimate_pair_moments",
    "sample_pairs",
    "SpaceTimePoint",
    "ParabolicCylinder",
    "DomainSpec",
    "parabolic_distance",
    "a_type_constant",
    "campanato_seminorm",
    "holder_seminorm",
    "embedding_exponent",
    "inclusion_holds",
]
