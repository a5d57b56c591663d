import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_underdetermined():
    # tiny grids in property tests routinely have fewer samples than frequencies
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="N_omega=.*underdetermined")
        yield


def dense_dft_oracle(mask):
    """Collocation matrix from explicit loops over sample points and frequencies.

    Independent of the FFT code path and of the integer phase reduction used
    by the library.
    """
    spec = mask.spec
    n = spec.n_r
    half = spec.n_lambda // 2
    freqs = [(a, b) for a in range(-half, spec.n_lambda - half) for b in range(-half, spec.n_lambda - half)]
    rows = []
    for flat in mask.samples:
        i, j = divmod(int(flat), n)
        rows.append([np.exp(2j * np.pi * (i * a + j * b) / n) for a, b in freqs])
    return np.array(rows) / n


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion and assert it."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
        _CRITERIA[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
