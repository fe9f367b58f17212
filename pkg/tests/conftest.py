import numpy as np
import pytest

from nambuhj.sampling import random_polynomial


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def polys(rng, n, count, degree=3):
    return [random_polynomial(rng, n, degree=degree) for _ in range(count)]


# one verdict line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = {}


@pytest.fixture
def verdict(request):
    def record(key, ok, detail):
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE[key] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
