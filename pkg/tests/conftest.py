import math

import numpy as np
import pytest

from distbeam.phasor import LinkChannel, SystemConfig


def random_channels(rng, m, gain_range=(0.1, 2.0)):
    gains = rng.uniform(*gain_range, m)
    thetas = rng.uniform(-math.pi, math.pi, m)
    return [LinkChannel(float(b), float(t)) for b, t in zip(gains, thetas)]


def unit_config(m):
    return SystemConfig(max(m, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance check, in run order."""
    lines = []
    for key in ("passed", "failed", "xfailed", "xpassed"):
        for rep in terminalreporter.stats.get(key, []):
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" in props and rep.when == "call":
                status = "PASS" if key in ("passed", "xpassed") else "FAIL"
                if key == "xfailed":
                    status = "FAIL (known unattainable, see notes)"
                lines.append((props["criterion"], status, props.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for crit, status, detail in sorted(lines, key=lambda x: x[0]):
            terminalreporter.write_line(f"criterion {crit}: {status}  {detail}".rstrip())
