import pytest

from engine.mesh import HybridMesh

from sample_meshes import make_junction_mesh, make_single_hex, make_two_tets


@pytest.fixture
def junction_mesh() -> HybridMesh:
    return make_junction_mesh()


@pytest.fixture
def single_hex() -> HybridMesh:
    return make_single_hex()


@pytest.fixture
def two_tets() -> HybridMesh:
    return make_two_tets()
