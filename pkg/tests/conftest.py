import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from apex_emotion import kernels

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("default")

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    if report.when == "call":
        item.stash[ACCEPTANCE] = [report]
    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line[1])


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run the test once per kernel backend, restoring the active one afterwards."""
    previous = kernels.backend_name()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_cohort():
    """Six synthetic subjects with short trials, already windowed and normalized."""
    from apex_emotion.dataset import build_datasets
    from apex_emotion.synth import SynthConfig, generate_cohort

    subjects, truth = generate_cohort(SynthConfig(n_subjects=6, n_videos=6, seed=3))
    datasets, raw = build_datasets(subjects)
    return subjects, truth, datasets, raw


class _Clock:
    def __init__(self):
        self.start = time.perf_counter()
        self.note = ""

    def elapsed(self) -> float:
        return time.perf_counter() - self.start


@pytest.fixture
def criterion(request):
    """Time an acceptance criterion and log one PASS/FAIL line for it."""
    number, title = request.node.get_closest_marker("criterion").args
    clock = _Clock()
    yield clock
    reports = request.node.stash.get(ACCEPTANCE, [])
    ok = bool(reports) and reports[0].passed
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({clock.elapsed():.1f} s)"
    if clock.note:
        line += f"  {clock.note}"
    print(line)
    request.config.stash[ACCEPTANCE].append((number, line))
