import pytest
from hypothesis import HealthCheck, settings

from chiplet_compiler.device import generate_backend

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, passed: bool | None, detail: str):
    status = "PASS" if passed else ("REPORT" if passed is None else "FAIL")
    ACCEPTANCE[criterion] = f"[{status}] criterion {criterion}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture(scope="session")
def backends():
    cache = {}

    def get(chiplets):
        if chiplets not in cache:
            cache[chiplets] = generate_backend(chiplets)
        return cache[chiplets]
    return get
