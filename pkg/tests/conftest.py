import pytest

from ecoloop.datasets import (
    MEDIASTORE_MODEL,
    MEDIASTORE_PROFILES,
    MEDIASTORE_RULES,
    REFERENCE_WORKLOAD,
)
from ecoloop.model import load_model
from ecoloop.profiles import load_repository
from ecoloop.rules import load_rules


@pytest.fixture(scope="session")
def model():
    return load_model(MEDIASTORE_MODEL)


@pytest.fixture(scope="session")
def repo():
    return load_repository(MEDIASTORE_PROFILES)


@pytest.fixture(scope="session")
def mediastore_rules():
    return load_rules(MEDIASTORE_RULES)


@pytest.fixture(scope="session")
def bundle_paths():
    return {
        "model": MEDIASTORE_MODEL,
        "profiles": MEDIASTORE_PROFILES,
        "rules": MEDIASTORE_RULES,
        "workload": REFERENCE_WORKLOAD,
    }
