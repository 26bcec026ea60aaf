import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dobbench.scenario import benchmark, benchmark_document, build

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def bench():
    return benchmark()


@pytest.fixture(scope="session")
def bench_doc():
    return benchmark_document()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def matched_document():
    """Benchmark with the plant equal to its nominal model and no disturbance."""
    doc = benchmark_document()
    p, n = doc["plant"], doc["nominal"]
    p.update(phi=n["phi_bar"], psi=n["psi_bar"], S=n["S_bar"], G=n["G_bar"], g=n["g_bar"], f_d=[])
    doc["signals"]["d"] = []
    return doc


@pytest.fixture(scope="session")
def matched():
    return build(matched_document())
