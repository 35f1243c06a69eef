import numpy as np
import pytest

from ptrmatrix.matrix import Matrix


def make_m2() -> Matrix:
    # column 0 all 1, (0,0) -> (0,1), everything else null
    return Matrix([[1, 0], [1, 0]], [[1, 1], [2, 3]])


def all_zero(s: int) -> Matrix:
    return Matrix(np.zeros((s, s), dtype=np.uint8), np.arange(s * s).reshape(s, s))


@pytest.fixture
def m2():
    return make_m2()
