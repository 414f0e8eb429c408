import pytest
from hypothesis import HealthCheck, settings

from surgkit.generation import generate_corpus
from surgkit.synthetic import make_frames
from surgkit.templates import default_templates

settings.register_profile(
    "suite",
    derandomize=True,
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def frames50():
    return make_frames(50, seed=11)


@pytest.fixture(scope="session")
def corpus50(frames50):
    return generate_corpus(frames50, default_templates(), seed=11)
