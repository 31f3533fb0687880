import pytest

from gvccarbon import synthetic


@pytest.fixture(scope="session")
def demo_config(tmp_path_factory):
    """One shared demo data directory; returns its config path."""
    target = tmp_path_factory.mktemp("demo-data")
    return synthetic.write_demo_dataset(target, seed=0)
