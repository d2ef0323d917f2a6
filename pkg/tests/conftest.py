import pytest

from fluxlev import sim


@pytest.fixture(scope="session")
def system():
    """Calibrated default system, built once for the whole session."""
    return sim.SystemModel.build()
