import pytest

from squid_tip import analytic, model, spectral


@pytest.fixture(scope="session")
def reference():
    return model.SquidParams.reference()


@pytest.fixture(scope="session")
def scaled(reference):
    return model.nondimensionalize(reference)


@pytest.fixture(scope="session")
def b0(scaled):
    return spectral.solve(scaled, 0.0)


@pytest.fixture(scope="session")
def b1(scaled):
    return spectral.solve(scaled, 0.01)


@pytest.fixture(scope="session")
def pm(b0):
    return analytic.perturbation_matrix(b0, 0.01)
