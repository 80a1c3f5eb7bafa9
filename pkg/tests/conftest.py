import pytest

from fratool import create_app
from fratool.layout import FoldedGeometry, generate_lattice, synthesize
from fratool.unitcell import IdealSource, SurrogateSource


@pytest.fixture()
def app(tmp_path):
    return create_app({'TESTING': True, 'OUTPUT_DIR': str(tmp_path / 'runs')})


@pytest.fixture()
def runner(app):
    return app.test_cli_runner()


@pytest.fixture(scope='session')
def default_geometry():
    return FoldedGeometry()


@pytest.fixture(scope='session')
def default_layout(default_geometry):
    return generate_lattice(default_geometry)


@pytest.fixture(scope='session')
def surrogate():
    return SurrogateSource()


@pytest.fixture(scope='session')
def surrogate_design(default_layout, surrogate):
    return synthesize(default_layout, surrogate, 28.0, height_zones=(20.0,))


@pytest.fixture(scope='session')
def ideal_design(default_layout):
    return synthesize(default_layout, IdealSource(), 28.0)
