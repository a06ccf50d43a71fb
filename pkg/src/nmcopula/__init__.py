"""Copulas for non-monotone dependence built from measure-preserving maps."""

from nmcopula.copula import NonMonoCopula, q_cdf, q_pdf, q_rectangle_mass, q_sample
from nmcopula.estimation import (
    FitOptions,
    FitResult,
    PseudoSample,
    fit,
    information_criteria,
    log_likelihood,
    pseudo_observations,
    select,
)
from nmcopula.estimators import CopulaSelector, MonotoneCopula, NonMonotoneCopula, PseudoObservations
from nmcopula.families import CopulaParams, Family, PickandsParams
from nmcopula.transforms import (
    MeasureMap,
    TransformKind,
    TransformSpec,
    bernoulli_map,
    build_measure_map,
    compose,
    scarsini_map,
    validate_transform,
)

__version__ = "0.1.0"

__all__ = [
    "CopulaParams",
    "CopulaSelector",
    "Family",
    "FitOptions",
    "FitResult",
    "MeasureMap",
    "MonotoneCopula",
    "NonMonoCopula",
    "NonMonotoneCopula",
    "PickandsParams",
    "PseudoObservations",
    "PseudoSample",
    "TransformKind",
    "TransformSpec",
    "bernoulli_map",
    "build_measure_map",
    "compose",
    "fit",
    "information_criteria",
    "log_likelihood",
    "pseudo_observations",
    "q_cdf",
    "q_pdf",
    "q_rectangle_mass",
    "q_sample",
    "scarsini_map",
    "select",
    "validate_transform",
]
