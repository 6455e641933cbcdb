"""Shared fixtures: builtin scenario bundles, safe-state sampling, caches."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from barrier_lab import (
    attach_spectra,
    build_clf,
    build_controller,
    build_model,
    build_pairs,
    builtin_scenario,
    find_boundary_equilibria,
    find_interior_equilibria,
    unfiltered_controller,
)

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("suite")


# sampling boxes enclosing the interesting region of each scenario's safe set
SAMPLE_BOX = {
    "fig3": ((-1.0, -3.0), (5.0, 3.0)),
    "fig3-h2a1": ((-1.0, -3.0), (5.0, 3.0)),
    "fig3-h1a2": ((-1.0, -3.0), (5.0, 3.0)),
    "fig3-h2a2": ((-1.0, -3.0), (5.0, 3.0)),
    "fig2": ((-3.0, 0.0), (3.0, 6.0)),
}


class ScenarioBundle:
    """Model, barrier pairs, clf, and controllers built from one builtin name."""

    def __init__(self, name: str):
        self.name = name
        self.config = builtin_scenario(name)
        self.model = build_model(self.config)
        self.pairs = build_pairs(self.config)
        self.clf = build_clf(self.config)
        self.controller = build_controller(self.config, self.model, self.pairs, self.clf)
        self.unfiltered = unfiltered_controller(self.config, self.model, self.clf)

    @property
    def pair(self):
        return self.controller.pair

    def safe_states(self, count: int, seed: int) -> np.ndarray:
        """Uniform rejection samples with h >= 0 for every carried barrier."""
        (x1_lo, x2_lo), (x1_hi, x2_hi) = SAMPLE_BOX[self.name]
        rng = np.random.default_rng(seed)
        out = []
        while len(out) < count:
            x = rng.uniform((x1_lo, x2_lo), (x1_hi, x2_hi), size=(4 * count, 2))
            keep = np.ones(x.shape[0], dtype=bool)
            for pair in self.controller.cbf_pairs:
                keep &= np.asarray(pair.h(x), dtype=float) >= 0.0
            out.extend(x[keep])
        return np.asarray(out[:count])


@pytest.fixture(scope="session")
def bundles():
    """Factory with a session cache: bundles('fig3') builds each scenario once."""
    cache = {}

    def get(name: str) -> ScenarioBundle:
        if name not in cache:
            cache[name] = ScenarioBundle(name)
        return cache[name]

    return get


@pytest.fixture(scope="session")
def analyzed(bundles):
    """Cached (boundary, interior) equilibrium reports with spectra attached."""
    cache = {}

    def get(name: str):
        if name not in cache:
            b = bundles(name)
            boundary = attach_spectra(find_boundary_equilibria(b.controller), b.controller)
            interior = attach_spectra(find_interior_equilibria(b.controller), b.controller)
            cache[name] = (boundary, interior)
        return cache[name]

    return get


@pytest.fixture(scope="session")
def fig3(bundles):
    return bundles("fig3")


@pytest.fixture(scope="session")
def fig2(bundles):
    return bundles("fig2")


@pytest.fixture(scope="session")
def fig3_h2a1(bundles):
    return bundles("fig3-h2a1")


@pytest.fixture(scope="session")
def fig3_h1a2(bundles):
    return bundles("fig3-h1a2")


@pytest.fixture(scope="session")
def fig3_h2a2(bundles):
    return bundles("fig3-h2a2")
