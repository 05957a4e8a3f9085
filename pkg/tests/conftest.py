import numpy as np
import pytest

# Collected acceptance-criterion results, printed as a summary block at the
# end of the run (see tests/test_acceptance.py).
ACCEPTANCE_RESULTS = []


def record_criterion(name, passed, detail=""):
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"{name}: {status}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_box(rng, dim, center_scale=1.0, min_width=0.05, max_width=2.0):
    center = rng.uniform(-center_scale, center_scale, size=dim)
    half = 0.5 * rng.uniform(min_width, max_width, size=dim)
    from nnreach import Box

    return Box(center - half, center + half)
