import pytest

from vlclink.config import RunConfig, build_setup, load_lens_catalog, load_presets
from vlclink.optics import PhotodiodeSpec, SourceSpec


@pytest.fixture(scope="session")
def catalog():
    return load_lens_catalog()


@pytest.fixture(scope="session")
def pd():
    return PhotodiodeSpec(3.6)


@pytest.fixture(scope="session")
def src():
    return SourceSpec(300.0)


@pytest.fixture(scope="session")
def presets():
    return load_presets()


@pytest.fixture(scope="session")
def setup():
    return build_setup(RunConfig().validate())


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one acceptance outcome; printed in the terminal summary."""
    log = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number, ok, detail=""):
        log[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        ok, detail = log[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
