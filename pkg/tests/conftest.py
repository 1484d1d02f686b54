import sys

import numpy as np
import pytest

from betapromp import data, perception, promp, recognition
from betapromp.basis import BasisConfig


@pytest.fixture(scope="session")
def benchmark():
    return data.gen_reaching(data.BenchmarkSpec(seed=0))


@pytest.fixture(scope="session")
def fits(benchmark):
    train, _ = benchmark
    return promp.fit_library(train, BasisConfig())


@pytest.fixture(scope="session")
def library(fits):
    return recognition.MovementLibrary([f.model for f in fits.values()])


@pytest.fixture(scope="session")
def integral_traces(benchmark, library):
    _, test = benchmark
    return [recognition.classify_stream(library, recognition.trajectory_observations(t)) for t in test]


@pytest.fixture(scope="session")
def phase_net(fits):
    demos = [d for f in fits.values() for d in f.demonstrations]
    pairs = perception.build_training_pairs(demos, 20)
    return perception.train(pairs, perception.PhaseNetConfig()), pairs


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, (ok, detail) in sorted(mod.RESULTS.items()):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
