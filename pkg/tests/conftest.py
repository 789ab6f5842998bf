import pytest

_RESULTS = {}


class Criterion:
    def __init__(self, number):
        self.number = number
        self.detail = ""

    def check(self, ok, detail):
        """Record the outcome, then assert it."""
        self.detail = detail
        _RESULTS[self.number] = (bool(ok), detail)
        assert ok, detail


@pytest.fixture
def criterion(request):
    num = request.node.get_closest_marker("criterion").args[0]
    c = Criterion(num)
    yield c
    if num not in _RESULTS:
        _RESULTS[num] = (False, c.detail or "raised before a verdict")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker and call.when == "call" and call.excinfo is not None:
        num = marker.args[0]
        ok, detail = _RESULTS.get(num, (False, ""))
        if ok or not detail:
            _RESULTS[num] = (False, f"{call.excinfo.typename}: {call.excinfo.value}")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        ok, detail = _RESULTS[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
