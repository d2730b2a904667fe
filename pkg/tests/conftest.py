from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # midi_writer, mock server helpers

from croon.audio import AudioBuffer

_acceptance_results: list[tuple[str, bool]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.when == "call":
        _acceptance_results.append((marker.args[0], report.passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, passed in _acceptance_results:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}: {name}")


@pytest.fixture
def tone_16k() -> AudioBuffer:
    """One second of 440 Hz at 16 kHz, the canonical 'user said something'."""
    t = np.arange(16000) / 16000.0
    samples = (0.3 * 32767 * np.sin(2 * np.pi * 440.0 * t)).astype(np.int16)
    return AudioBuffer(samples, 16000)
