import numpy as np
import pytest

from multitime import WEAK_COUPLING_PARAMS, STRONG_COUPLING_PARAMS, ModelParams


@pytest.fixture(scope="session")
def strong_params():
    return STRONG_COUPLING_PARAMS


@pytest.fixture(scope="session")
def weak_params():
    return WEAK_COUPLING_PARAMS


def random_params(rng: np.random.Generator) -> ModelParams:
    """A random but physically sensible parameter draw."""
    return ModelParams(
        omega1_ghz=rng.uniform(4.5, 5.5),
        omega2_ghz=rng.uniform(4.5, 5.5),
        g12_mhz=rng.uniform(0.5, 20.0),
        t1_ns=rng.uniform(5.0, 120.0),
        t2_ns=rng.uniform(5.0, 120.0),
    )


def random_hermitian(rng: np.random.Generator, dim: int, traceless: bool = False,
                     unit_norm: bool = False) -> np.ndarray:
    mat = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    mat = (mat + mat.conj().T) / 2
    if traceless:
        mat -= np.trace(mat) / dim * np.eye(dim)
    if unit_norm:
        mat /= np.linalg.norm(mat)
    return mat


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    mat = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(mat)
    return q * (np.diag(r) / np.abs(np.diag(r)))
