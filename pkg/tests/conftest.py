import pytest

from videoground.annotate import AnnotationConfig
from videoground.fixtures import annotation_corpus, calibrated_filter_corpus
from videoground.gateway.stub import StubGateway


@pytest.fixture
def stub():
    """A gateway with empty fixture tables (hash fallbacks only)."""
    return StubGateway()


@pytest.fixture
def filter_env():
    videos, config = calibrated_filter_corpus()
    return videos, StubGateway(config)


@pytest.fixture
def anno_env():
    videos, config = annotation_corpus()
    return videos, StubGateway(config)


@pytest.fixture
def anno_config():
    return AnnotationConfig()
