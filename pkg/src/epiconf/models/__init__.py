"""Registry of parametric families."""

from __future__ import annotations

from typing import Callable

from ..errors import ConfigError
from .base import (ANALYTIC_DENSITY, ANCILLARY, DISCRETE_DATA, DISCRETE_PARAMETER,
                   EXACT_CONDITIONAL, SUFFICIENT_T, T_LAW, Dataset, ParametricModel, as_dataset)
from .exponential import (CurvedNormal, GammaShape, NormalMeanEqVar, curved_b, curved_mle,
                          gamma_log_partition, gamma_t, gamma_t_roots)
from .lattice import EVANS_TABLE, Binomial, DiscreteUniformTriple, Evans2x2, NegativeBinomial
from .location import LocationFamily, NormalLocation, UniformShift, UniformWidth2

REGISTRY: dict[str, Callable[..., ParametricModel]] = {
    "normal_location": NormalLocation,
    "location_family": LocationFamily,
    "discrete_uniform_triple": DiscreteUniformTriple,
    "uniform_shift": UniformShift,
    "uniform_width2": UniformWidth2,
    "gamma_shape": GammaShape,
    "normal_mean_eq_var": NormalMeanEqVar,
    "curved_normal": CurvedNormal,
    "binomial": Binomial,
    "negative_binomial": NegativeBinomial,
    "evans_2x2": Evans2x2,
}

_PARAM_ALIASES = {"statistic": "statistic_kind"}


def get_model(name: str, **params) -> ParametricModel:
    """Construct a registered model by name, e.g. ``get_model("binomial", n=10)``."""
    try:
        ctor = REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; known: {', '.join(sorted(REGISTRY))}") from None
    params = {_PARAM_ALIASES.get(k, k): v for k, v in params.items()}
    try:
        return ctor(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for model {name!r}: {exc}") from None


def list_models() -> list[str]:
    return sorted(REGISTRY)


__all__ = [
    "ANALYTIC_DENSITY", "ANCILLARY", "DISCRETE_DATA", "DISCRETE_PARAMETER", "EXACT_CONDITIONAL",
    "EVANS_TABLE", "REGISTRY", "SUFFICIENT_T", "T_LAW",
    "Binomial", "CurvedNormal", "Dataset", "DiscreteUniformTriple", "Evans2x2", "GammaShape",
    "LocationFamily", "NegativeBinomial", "NormalLocation", "NormalMeanEqVar", "ParametricModel",
    "UniformShift", "UniformWidth2",
    "as_dataset", "curved_b", "curved_mle", "gamma_log_partition", "gamma_t", "gamma_t_roots",
    "get_model", "list_models",
]
