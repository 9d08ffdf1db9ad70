import pathlib

import numpy as np
import pytest

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def sessions_csv():
    return DATA / "sessions_small.csv"


@pytest.fixture
def prices_csv():
    return DATA / "prices_tou.csv"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_csv(path, text):
    path.write_text(text.lstrip("\n"), encoding="utf-8")
    return path
