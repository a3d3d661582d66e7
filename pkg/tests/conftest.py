import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from corrbench.datagen import GenerationConfig, generate_subject

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# 23 patterns, 46 short segments: every module exercised in well under a second
SMALL = GenerationConfig(n_subjects=2, n_segments=46, pattern_frequency=(2, 2), segment_lengths=(600, 900, 1200))


@pytest.fixture(scope="session")
def small_config():
    return SMALL


@pytest.fixture(scope="session")
def small_subject():
    return generate_subject(0, SMALL)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
