import numpy as np
import pytest
from hypothesis import strategies as st

from metaplectic_up import SymplecticMatrix, chirp, fourier, multiplier, partial_fourier, rescale


def random_symmetric(rng, d, scale=1.0):
    X = rng.normal(scale=scale, size=(d, d))
    return 0.5 * (X + X.T)


def random_symplectic(rng, d, depth=4):
    """Product of random generators; well conditioned for moderate depth."""
    S = rescale(np.eye(d) + 0.3 * rng.normal(size=(d, d)))
    for _ in range(depth):
        pick = rng.integers(4)
        if pick == 0:
            S = S @ chirp(random_symmetric(rng, d, 0.7))
        elif pick == 1:
            S = S @ multiplier(random_symmetric(rng, d, 0.7))
        elif pick == 2:
            S = S @ fourier(d)
        else:
            S = S @ partial_fourier(d, [int(rng.integers(1, d + 1))])
    return S


def random_orthosymplectic(rng, d, rank=None):
    """[[X, Y], [-Y, X]] with X + iY unitary; ``rank`` fixes rank(Y)."""
    if rank is None:
        M = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        U, _ = np.linalg.qr(M)
    else:
        O, _ = np.linalg.qr(rng.normal(size=(d, d)))
        theta = np.zeros(d)
        theta[:rank] = rng.uniform(0.3, np.pi - 0.3, size=rank)
        U = O @ np.diag(np.exp(1j * theta)) @ O.T
    X, Y = U.real, U.imag
    return SymplecticMatrix(np.block([[X, Y], [-Y, X]]))


seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
