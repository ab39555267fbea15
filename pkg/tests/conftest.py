import sys

import numpy as np
import pytest

import dispersio as dp


def pytest_terminal_summary(terminalreporter):
    # surface the one-line-per-criterion acceptance results after capture
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ex11():
    return dp.load_bundled("example_1_1")


@pytest.fixture(scope="session")
def ex11_fo():
    return dp.load_bundled("example_1_1_firstorder_only")


@pytest.fixture(scope="session")
def quasi():
    return dp.load_bundled("quasilinear_demo")


def make_violator(base):
    """The bundled example with an imaginary diagonal added to B_1.

    The skew part then has a nonzero diagonal block, which no spectral gap
    can divide, so the coupling check fails and the solver should see
    Nyquist-proportional growth.
    """
    bad = np.array(base.coupling.const, dtype=complex)
    bad[0, 0, 0] += 1j
    return dp.SystemSpec(
        dispersion=base.dispersion,
        coupling=dp.FirstOrderSymbol(base.dim, bad),
        period=base.period,
        grid_points=base.grid_points,
        sobolev_index=base.sobolev_index,
        initial_data=base.initial_data,
        name="diag_imag_violator",
    )


@pytest.fixture(scope="session")
def violator(ex11):
    return make_violator(ex11)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def random_passing_system(rng, ncomp=None, dim=None):
    """Random system with simple dispersion spectrum that passes the
    coupling check by construction: in the eigenbasis the coupling has a
    real diagonal, and the dispersion eigenvalues never cross.
    """
    n = int(ncomp or rng.integers(2, 5))
    d = int(dim or rng.integers(1, 4))
    diag = np.sort(rng.uniform(-2.0, 2.0, n))
    while np.min(np.diff(diag)) < 0.3:
        diag = np.sort(rng.uniform(-2.0, 2.0, n))
    scales = rng.uniform(0.5, 2.0, d)
    shifts = rng.uniform(-1.0, 1.0, d)

    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(z)

    coeffs = np.zeros((d, d, n, n), dtype=complex)
    for j in range(d):
        coeffs[j, j] = q @ np.diag(scales[j] * diag + shifts[j]) @ q.conj().T

    bdiag = []
    for j in range(d):
        b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        np.fill_diagonal(b, rng.normal(size=n))   # real diagonal required
        bdiag.append(q @ b @ q.conj().T)
    coupling = dp.FirstOrderSymbol(d, np.array(bdiag))
    return dp.SystemSpec(dispersion=dp.QuadraticSymbol(d, coeffs),
                         coupling=coupling, name="random_passing")
