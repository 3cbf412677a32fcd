import pytest
from hypothesis import HealthCheck, settings

from l1tes.leadfield import generate_synthetic_leadfield, split_and_project, target_for_point

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture
def slf16():
    lf = generate_synthetic_leadfield(1, 16, 200, 2.0)
    return split_and_project(lf, target_for_point(lf, 5, (0, 0, 1)))


def pytest_terminal_summary(terminalreporter):
    from .helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {line}")
