import pytest

from rvos.datasets import DatasetIndex, generate_dataset
from suite_support import SUITE_DOC


@pytest.fixture(scope="session")
def ds_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("shared-ds")
    generate_dataset(SUITE_DOC, seed=11, out_dir=root)
    return root


@pytest.fixture(scope="session")
def ds_index(ds_root):
    return DatasetIndex(ds_root)
