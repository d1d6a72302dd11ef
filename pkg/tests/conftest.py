"""Shared fixtures, independent numeric oracles and the acceptance summary hook."""
from __future__ import annotations

import contextlib

import pytest
from hypothesis import HealthCheck, settings
from scipy.integrate import quad

from peakcake.experiments import figdisc_instance, figure1_instance, figure3_instance

settings.register_profile("default", max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_RESULTS: dict[int, tuple[str, bool, str]] = {}


def raw_density(p: float, h: float, k: float):
    return lambda x: max(0.0, h - k * abs(x - p))


def quad_value(p: float, h: float, k: float, x: float, y: float) -> float:
    """Adaptive quadrature of the triangle, with the kinks as breakpoints."""
    pts = [t for t in (p - h / k, p, p + h / k) if x < t < y]
    val, _ = quad(raw_density(p, h, k), x, y, points=pts or None, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


@pytest.fixture
def fig3():
    return figure3_instance()


@pytest.fixture
def fig1():
    return figure1_instance()


@pytest.fixture
def figdisc():
    return figdisc_instance()


@pytest.fixture
def criterion():
    """``with criterion(3, "label"):`` records a pass/fail line for the summary."""

    @contextlib.contextmanager
    def record(number: int, label: str):
        try:
            yield
        except BaseException as exc:
            _RESULTS[number] = (label, False, f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
            print(f"criterion {number}: FAIL  {label}")
            raise
        _RESULTS[number] = (label, True, "")
        print(f"criterion {number}: PASS  {label}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        label, ok, why = _RESULTS[number]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {label}"
        if why:
            line += f"  ({why[:160]})"
        terminalreporter.write_line(line)
