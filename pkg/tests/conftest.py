import numpy as np
import pytest

from qmeasure import DensityOperator, LinearOperator, PureState


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def random_hermitian(rng, dim: int) -> LinearOperator:
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return LinearOperator(m + m.conj().T)


def random_state(rng, dim: int) -> PureState:
    return PureState(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def random_density(rng, dim: int) -> DensityOperator:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = a @ a.conj().T
    return DensityOperator(m / np.trace(m))


def random_projector(rng, dim: int, rank: int) -> LinearOperator:
    q, _ = np.linalg.qr(rng.standard_normal((dim, rank))
                        + 1j * rng.standard_normal((dim, rank)))
    return LinearOperator(q @ q.conj().T)
