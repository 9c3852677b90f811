"""Shared fixtures and parameter factories for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

from stochvol.models import ModelSpec

ALL_MODELS = ("M2.1", "M2.2", "M2.3", "M3.1", "M3.2", "M3.3")

BASE = dict(alpha=-8.0, phi=0.95, sigma=0.2, rho=-0.4)
EXTRA = {
    1: {},
    2: dict(nu=8.0, lam=-0.5),
    3: dict(pi1=0.01, pi2=0.01),
}


def make_spec(model: str, **overrides) -> ModelSpec:
    """A valid spec for any family with sensible defaults, overridable."""
    variant = int(model[-1])
    kwargs = {**BASE, **EXTRA[variant], **overrides}
    return ModelSpec.create(model, **kwargs)


def random_valid_kwargs(model: str, rng: np.random.Generator) -> dict:
    """Random parameter draws comfortably inside every validity bound."""
    kwargs = dict(
        alpha=float(rng.uniform(-10.0, 2.0)),
        phi=float(rng.uniform(-0.95, 0.98)),
        sigma=float(rng.uniform(0.05, 0.8)),
        rho=float(rng.uniform(-0.95, 0.95)),
    )
    variant = int(model[-1])
    if variant == 2:
        kwargs["nu"] = float(rng.uniform(4.5, 40.0))
        kwargs["lam"] = float(rng.uniform(-2.0, 2.0))
    elif variant == 3:
        kwargs["pi1"] = float(rng.uniform(0.001, 0.2))
        kwargs["pi2"] = float(rng.uniform(0.001, 0.2))
    return kwargs


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260816)
