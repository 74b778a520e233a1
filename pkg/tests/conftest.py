import numpy as np
import pytest
from hypothesis import settings

from critlab.hopf import find_catastrophe
from critlab.initial_data import make_sech_datum

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sech():
    return make_sech_datum(1.0)


@pytest.fixture(scope="session")
def cp(sech):
    return find_catastrophe(sech)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# shared transcendent solves (each a few seconds)

@pytest.fixture(scope="session")
def p12_family():
    from critlab.painleve import solve_p12_family

    return dict(zip((-1.0, 0.0, 1.0), solve_p12_family([-1.0, 0.0, 1.0], 50.0, 8000)))


@pytest.fixture(scope="session")
def p12_kdv_check():
    """U_T + U U_X + U_XXX/12 at T = 0 by 4th-order differences in T (step 0.02)."""
    from critlab.painleve import grid_derivative, solve_p12_family

    dl = 0.02
    f = solve_p12_family([-2 * dl, -dl, dl, 2 * dl, 0.0], 50.0, 8000)
    UT = (f[0].U_samples - 8 * f[1].U_samples + 8 * f[2].U_samples - f[3].U_samples) / (12 * dl)
    s0 = f[4]
    r = UT + s0.U_samples * grid_derivative(s0, 1) + grid_derivative(s0, 3) / 12
    return s0.X_grid, r


@pytest.fixture(scope="session")
def tritronquee():
    from critlab.painleve import solve_tritronquee

    return solve_tritronquee(100.0, 1.0, n_samples=4001)


# acceptance summary: one line per criterion, printed even when output is captured

ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
