import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_terminal_summary(terminalreporter):
    from tests import _acceptance_log as log

    if not log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, log.N_CRITERIA + 1):
        terminalreporter.write_line(log.line(n))
