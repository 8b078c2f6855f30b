import pytest
from hypothesis import settings as hypothesis_settings

from beam_modes.config import IntegratorConfig, get_settings

hypothesis_settings.register_profile("numerics", deadline=None, max_examples=50)
hypothesis_settings.load_profile("numerics")


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def tight_config() -> IntegratorConfig:
    return IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)


@pytest.fixture
def serial_jobs(monkeypatch):
    monkeypatch.setenv("BEAM_MODES_MAX_PARALLEL_JOBS", "1")
    get_settings.cache_clear()
    return 1
