import numpy as np
import pytest

from qptomo.pom import product_pom, sic_pom

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def product():
    return product_pom()


@pytest.fixture(scope="session")
def sic():
    return sic_pom()


@pytest.fixture(scope="session", params=["product", "sic"])
def any_pom(request, product, sic):
    return product if request.param == "product" else sic


@pytest.fixture
def rng():
    return np.random.default_rng(20100501)


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def random_hermitian(rng, d=4):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (a + a.conj().T)


def random_unitary(rng, d=4):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
