import pytest

from gemmforge.backends import available_backends, get_backend


@pytest.fixture(params=available_backends())
def backend(request):
    """Run the test once per available kernel backend."""
    return get_backend(request.param)


@pytest.fixture
def py_backend():
    return get_backend("python")
