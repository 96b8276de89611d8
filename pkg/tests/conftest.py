import time

import numpy as np
import pytest

from pwapid.pipeline import synthesize
from pwapid.presets import cstr_example


@pytest.fixture(scope="session")
def cstr():
    return cstr_example()


class _Controllers:
    """Synthesizes each reactor scheme at most once per session."""

    def __init__(self, model, schemes):
        self.model, self.schemes = model, schemes
        self._cache, self.seconds = {}, {}

    def __call__(self, key):
        if key not in self._cache:
            t = time.perf_counter()
            self._cache[key] = synthesize(self.model, self.schemes[key])
            self.seconds[key] = time.perf_counter() - t
        return self._cache[key]


@pytest.fixture(scope="session")
def controllers(cstr):
    return _Controllers(*cstr)


@pytest.fixture(scope="session")
def law_files(controllers, tmp_path_factory):
    """Law JSON files for the three schemes, written once."""
    from pwapid.mpqp import save_law

    root = tmp_path_factory.mktemp("laws")
    out = {}

    def get(key):
        if key not in out:
            path = root / f"law_{key}.json"
            save_law(controllers(key).law, path)
            out[key] = path
        return out[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line and fail the test when the criterion is not met."""

    def record(title: str, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE.append(line)
        print(line)
        assert passed, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
