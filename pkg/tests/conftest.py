import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "xnet",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("xnet")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance checks")


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, elapsed, limit, detail = ACCEPTANCE[key]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {key}: {status} ({elapsed:.2f} s, limit {limit} s) {detail}")
