import numpy as np
import pytest

from hetsense import KernelSpec, MeanSpec, Prior, Sensor, SensorArray, make_sensors


@pytest.fixture
def prior():
    return Prior(MeanSpec("constant", 0.5), KernelSpec(2.0, 3.0))


@pytest.fixture
def storm_prior():
    return Prior(MeanSpec(), KernelSpec(5.8, 10.0))


@pytest.fixture
def mixed4():
    return SensorArray.of(
        [
            Sensor("a", 0.0, 0.0, "H", 0.3),
            Sensor("b", 2.0, 1.0, "H", 0.2),
            Sensor("c", 1.0, -1.0, "L", 0.4, 0.3),
            Sensor("d", -1.0, 2.0, "L", 0.1, -0.2),
        ]
    )


def random_array(rng, n_high, n_low, box=10.0, noise_high=0.3, noise_low=0.4, threshold=0.0):
    hi = rng.uniform(0, box, (n_high, 2))
    lo = rng.uniform(0, box, (n_low, 2))
    return SensorArray.of(
        make_sensors(hi, "H", noise_high, cost=150.0)
        + make_sensors(lo, "L", noise_low, threshold, cost=30.0)
    )


ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def report():
    """Record one acceptance line; the run prints them all at the end."""

    def _report(name: str, passed: bool, detail: str) -> bool:
        line = (name, bool(passed), detail)
        ACCEPTANCE.append(line)
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        return bool(passed)

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
