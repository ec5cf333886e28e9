import pytest

from maskcue import _kernels


@pytest.fixture(params=_kernels.available())
def backend(request):
    """Run the test once per available kernel backend."""
    before = _kernels.active()
    _kernels.use(request.param)
    yield request.param
    _kernels.use(before)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


from hypothesis import settings

# kernels and scenario generation can be slow on a loaded machine
settings.register_profile("default", deadline=None)
settings.load_profile("default")
