import pytest

from sinet.encoding import build_vocabulary
from sinet.model import SinetConfig
from sinet.synthetic import TARGET_DOMAIN, make_dataset
from sinet.training import encode_dataset

TINY = dict(smiles_len=56, inchi_len=72, conv_filters=3, lstm_units=4, dense_units=4)


def tiny_config(dataset, variant="dual", **over):
    sv = build_vocabulary(dataset.smiles, reserve_unk=True)
    iv = build_vocabulary(dataset.inchi, reserve_unk=True)
    return SinetConfig(sv, iv, variant, **{**TINY, **over})


@pytest.fixture(scope="session")
def small_dataset():
    return make_dataset(80, seed=1)


@pytest.fixture(scope="session")
def small_config(small_dataset):
    return tiny_config(small_dataset)


@pytest.fixture(scope="session")
def small_encoded(small_dataset, small_config):
    return encode_dataset(small_dataset, small_config)


@pytest.fixture(scope="session")
def target_dataset():
    return make_dataset(40, seed=2, domain=TARGET_DOMAIN)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
