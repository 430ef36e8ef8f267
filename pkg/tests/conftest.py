import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("katolab", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("katolab")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and short title")


def pytest_runtest_makereport(item, call):
    m = item.get_closest_marker("criterion")
    if m is None or call.when != "call":
        return
    n, title = m.args
    ok = call.excinfo is None
    detail = getattr(item, "_detail", "")
    if not ok:
        detail = call.excinfo.exconly().splitlines()[0][:160]
    _CRITERIA[n] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n} {'PASS' if ok else 'FAIL'}: {title} ({detail})")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def detail(request):
    """Call with a short string to attach measured numbers to the acceptance summary line."""
    def put(text):
        request.node._detail = text
        print(text)
    return put
