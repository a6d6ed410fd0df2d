# Root conftest: puts the repository root on sys.path for the test suite.


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: refinement studies on meshes up to 16^3 cells")
