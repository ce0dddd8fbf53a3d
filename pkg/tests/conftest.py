import numpy as np
import pytest

from lambdacoal.simulate import stream


@pytest.fixture
def rng():
    return stream(20240601, 0)


def std_err(x):
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / np.sqrt(x.size))
