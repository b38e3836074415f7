"""Fixtures pytest communes."""

from collections.abc import Iterator

import pytest

from ring_analyzer.config import get_settings
from ring_analyzer.core import distribution
from ring_analyzer.core.exact_engine import default_engine
from ring_analyzer.models.simulation import SimConfig


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    """Isole chaque test des variables d'environnement et du cache de settings."""
    for name in (
        "RING_ANALYZER_NU",
        "RING_ANALYZER_J_MAX",
        "RING_ANALYZER_THREADS",
        "RING_ANALYZER_VALIDATE_TRIALS",
        "LOG_LEVEL",
        "APP_ENV",
        "LOG_FILE",
    ):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def clean_engine() -> Iterator[None]:
    """Vide les tables mémorisées avant et après le test."""
    default_engine().clear()
    distribution._propagate.cache_clear()
    yield
    default_engine().clear()
    distribution._propagate.cache_clear()


@pytest.fixture
def small_config() -> SimConfig:
    """Petite configuration de simulation reproductible."""
    return SimConfig(ring_size=50, t=1.0, trials=2000, master_seed=7)
