"""Python access to the dotmarg reconstruction core."""

import json
from dataclasses import dataclass

import numpy as np

from . import _core
from ._core import (
    ConfigError,
    ContractError,
    DeadChannelError,
    NumericalError,
    coupling_jacobian,
    fresnel_reflectance,
    henyey_greenstein_cosine,
    l2_error,
    leading_eigenvectors,
    posterior_mean,
    prior_covariance,
    projection_from_basis,
    truncation_radius,
)


@dataclass
class CaseResult:
    report: dict
    volumes: dict  # name -> array indexed [z, y, x]

    @property
    def errors(self):
        return self.report["errors"]


def _text(config):
    if config is None:
        return "{}"
    return config if isinstance(config, str) else json.dumps(config)


def validate_scenario(config=None):
    return _core.validate_scenario(_text(config))


def run_case(config=None, threads=0):
    """Run one scenario; `config` is a dict or JSON text in the CLI format."""
    text, volumes, (nx, ny, nz) = _core.run_case(_text(config), threads)
    shaped = {k: np.asarray(v).reshape(nz, ny, nx) for k, v in volumes.items()}
    return CaseResult(json.loads(text), shaped)


__all__ = [
    "CaseResult",
    "ConfigError",
    "ContractError",
    "DeadChannelError",
    "NumericalError",
    "coupling_jacobian",
    "fresnel_reflectance",
    "henyey_greenstein_cosine",
    "l2_error",
    "leading_eigenvectors",
    "posterior_mean",
    "prior_covariance",
    "projection_from_basis",
    "run_case",
    "truncation_radius",
    "validate_scenario",
]
