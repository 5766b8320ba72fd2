"""Named experiment presets and builders for the two bundled problems.

Preset dictionaries are plain JSON-serializable configuration; builders
turn them into model objects. The normal-normal preset stores prior and
likelihood scales as standard deviations (prior sd 5, likelihood sd 10,
n=100) while the programmatic constructors take variances.
"""

from __future__ import annotations

import copy
import math

import numpy as np

from .errors import DataError
from .models import (ModelSpec, NormalNormalModel, PortfolioProblem,
                     RandomSource, UtilitySpec, summary_mean)

NORMAL_NORMAL = "normal-normal"
PORTFOLIO = "portfolio"

_PRESETS = {
    NORMAL_NORMAL: {
        "name": NORMAL_NORMAL,
        "experiment": NORMAL_NORMAL,
        "model": {
            "prior_mean": 0.0,
            "prior_sd": 5.0,
            "likelihood_sd": 10.0,
            "n": 100,
            "true_theta": 3.0,
        },
        "simulate": {"N": 100000, "seed": 2061, "sorted_pairing": False},
        "data_seed": 424242,
        "train": {
            "learning_rate": 1e-3,
            "batch_size": 256,
            "max_epochs": 300,
            "patience": 30,
            "validation_fraction": 0.1,
            "seed": 42,
        },
        "posterior": {"M": 10000, "sample_seed": 5150},
    },
    PORTFOLIO: {
        "name": PORTFOLIO,
        "experiment": PORTFOLIO,
        "model": {
            "risk_free": 0.05,
            "return_mean": 0.1,
            "return_sd": 0.25,
            "risk_aversion": 2.0,
            "weight_domain": [0.0, 1.0],
        },
        "simulate": {"N": 100000, "seed": 7002, "sorted_pairing": True,
                     "grid_size": 101},
        "train": {
            "learning_rate": 1e-3,
            "batch_size": 256,
            "max_epochs": 80,
            "patience": 10,
            "validation_fraction": 0.1,
            "seed": 11,
        },
        "eu": {"M": 1024, "scheme": "uniform_grid"},
        "optimize": {"grid_size": 101, "refine": True},
    },
}


def preset_names():
    return sorted(_PRESETS)


def get_preset(name: str) -> dict:
    """Deep copy of the named preset configuration."""
    if name not in _PRESETS:
        raise DataError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return copy.deepcopy(_PRESETS[name])


def build_normal_normal(config: dict) -> NormalNormalModel:
    m = config["model"]
    return NormalNormalModel(prior_mean=float(m["prior_mean"]),
                             prior_variance=float(m["prior_sd"]) ** 2,
                             likelihood_variance=float(m["likelihood_sd"]) ** 2,
                             n=int(m["n"]))


def generate_observed_data(config: dict, seed=None) -> np.ndarray:
    """Seeded draw of the observed sample at the preset's true parameter."""
    m = config["model"]
    rng = RandomSource(seed=int(config["data_seed"] if seed is None else seed),
                       stream=9)
    return rng.normal(int(m["n"]), mean=float(m["true_theta"]),
                      sd=float(m["likelihood_sd"]))


def build_portfolio(config: dict) -> PortfolioProblem:
    m = config["model"]
    return PortfolioProblem(risk_free=float(m["risk_free"]),
                            return_mean=float(m["return_mean"]),
                            return_sd=float(m["return_sd"]),
                            risk_aversion=float(m["risk_aversion"]),
                            weight_domain=tuple(m["weight_domain"]))


def portfolio_model_spec(problem: PortfolioProblem) -> ModelSpec:
    """Return draw as the parameter with an identity forward map.

    The risky return plays the role of theta; y = f(theta) = theta makes
    the summary column carry the return itself.
    """

    def prior(rng: RandomSource) -> float:
        return float(rng.normal(mean=problem.return_mean, sd=problem.return_sd))

    def forward(theta: float, n: int, rng: RandomSource) -> np.ndarray:
        return np.full(n, theta)

    return ModelSpec(prior_sampler=prior, forward=forward, summary=summary_mean,
                     n_obs=1, name="portfolio-return")


def decision_grid(config: dict) -> np.ndarray:
    lo, hi = config["model"].get("weight_domain", [0.0, 1.0])
    g = int(config.get("simulate", {}).get("grid_size", 101))
    return np.linspace(float(lo), float(hi), g)
