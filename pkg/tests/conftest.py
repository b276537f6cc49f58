import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def small_data():
    from trajnas.synthdata import generate_dataset

    return generate_dataset(seed=3, n_train_scenes=4, n_val_scenes=3, agents_per_scene=6, clutter_per_scene=2)


@pytest.fixture(scope="session")
def desk():
    from trajnas.genome import default_space

    return default_space("desk")


ACCEPTANCE_LINES = []


def record_acceptance(number, passed, text):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {text}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
