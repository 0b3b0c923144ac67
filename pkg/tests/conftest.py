from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

from gotkit.config import load_model
from gotkit.model import SystemModel, validate_model

REPO_ROOT = Path(__file__).resolve().parents[1]
REFERENCE_CONFIG = REPO_ROOT / "configs" / "reference.yaml"


def identity_source(num_semantics: int, num_contexts: int, num_actuations: int) -> np.ndarray:
    eye = np.eye(num_semantics)
    return np.broadcast_to(
        eye, (num_contexts, num_actuations, num_semantics, num_semantics)
    ).copy()


def random_model(
    rng: np.random.Generator,
    num_semantics: int = 2,
    num_contexts: int = 1,
    num_actuations: int = 2,
    sampling_cost: float | None = None,
) -> SystemModel:
    """Random fully-supported model; every policy's loop is then communicating."""
    s, v, a = num_semantics, num_contexts, num_actuations
    p_src = rng.dirichlet(np.ones(s), size=(v, a, s))
    p_ctx = rng.dirichlet(np.ones(v), size=(v,))
    c1 = rng.uniform(0.0, 10.0, size=(v, s))
    c2 = rng.uniform(0.0, 5.0, size=a)
    c3 = rng.uniform(0.0, 2.0, size=a)
    return validate_model(
        num_semantics=s,
        num_contexts=v,
        num_actuations=a,
        source_dynamics=p_src,
        context_dynamics=p_ctx,
        channel_success=float(rng.uniform(0.3, 0.95)),
        status_inherent=c1,
        actuation_gain=c2,
        actuation_inherent=c3,
        sampling_cost=float(rng.uniform(0.0, 3.0)) if sampling_cost is None else sampling_cost,
    )


@pytest.fixture(scope="session")
def reference_model() -> SystemModel:
    return load_model(REFERENCE_CONFIG)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance checklist, one PASS/FAIL line per criterion."""
    for name in ("test_acceptance", "tests.test_acceptance"):
        module = sys.modules.get(name)
        report = getattr(module, "ACCEPTANCE_REPORT", None)
        if report:
            terminalreporter.section("acceptance criteria")
            for line in report:
                terminalreporter.write_line(line)
            break
