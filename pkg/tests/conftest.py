import numpy as np
import pytest

from syncmark.corpus import generate_corpus, make_background, make_host

CORPUS_SEED = 20240501
CORPUS_COUNT = 50


@pytest.fixture(scope="session")
def desk_corpus_dir(tmp_path_factory):
    """The 50-image desk corpus on disk (DUTS-style layout)."""
    root = tmp_path_factory.mktemp("desk_corpus")
    generate_corpus(root, count=CORPUS_COUNT, seed=CORPUS_SEED)
    return root


@pytest.fixture(scope="session")
def desk_corpus_mem():
    """The same hosts/masks/backgrounds as in-memory arrays (subset helper)."""
    hosts = []
    for i in range(CORPUS_COUNT):
        host, mask = make_host(i, CORPUS_SEED)
        hosts.append((host, mask))
    backgrounds = [make_background(i, CORPUS_SEED) for i in range(CORPUS_COUNT)]
    return hosts, backgrounds


@pytest.fixture(scope="session")
def mini_corpus_dir(tmp_path_factory):
    """A 6-image corpus for fast harness/CLI tests."""
    root = tmp_path_factory.mktemp("mini_corpus")
    generate_corpus(root, count=6, seed=9000)
    return root


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
