# tests/conftest.py

import numpy as np
import pytest

from backend.api.schemas import ScenarioFile
from backend.service.scenarios import resolve

# Small enough for the branch-level sampler and the mixture to stay fast.
SMALL = {
    "name": "small",
    "cellular": {"n": 4, "gamma_bar_db": 10.0},
    "prs": {"m": 3, "k": 3, "rho": 0.5},
    "interference": {"mz": 2, "gamma_z_bar_db": 0.0},
    "fso": {"r": 2, "mu_r_db": 20.0},
    "hpa": {"model": "sel", "ibo": 2.0},
    "e2e": {"beta_db": 0.0},
}


@pytest.fixture
def small_scenario() -> ScenarioFile:
    return ScenarioFile.model_validate(SMALL)


@pytest.fixture
def small_link(small_scenario):
    return resolve(small_scenario)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def binomial_slack(p: float, n: int, sigmas: float = 4.0) -> float:
    return sigmas * np.sqrt(max(p * (1.0 - p), 1e-4) / n) + 2e-3
