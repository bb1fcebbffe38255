import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_amplitudes(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def same_ray(a, b, tol=1e-9):
    """Overlap oracle on raw arrays, independent of the library's comparison helpers."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return abs(np.vdot(a / np.linalg.norm(a), b / np.linalg.norm(b))) >= 1 - tol


def factor_out(amps, keep):
    """Pure state of the 1-based qubits ``keep`` (in that order) from a product state.

    Plain SVD on raw arrays; asserts the rest is unentangled with them.
    """
    amps = np.asarray(amps, dtype=complex)
    n = amps.size.bit_length() - 1
    axes = [q - 1 for q in keep]
    rest = [a for a in range(n) if a not in axes]
    m = np.transpose(amps.reshape([2] * n), axes + rest).reshape(2 ** len(axes), -1)
    u, s, _ = np.linalg.svd(m)
    assert s[1:].sum() < 1e-9 if len(s) > 1 else True, "qubits are entangled with the rest"
    return u[:, 0]


def pauli_power(z, x):
    """``Z^z X^x`` as a literal 2x2 matrix."""
    m = np.eye(2, dtype=complex)
    if x:
        m = np.array([[0, 1], [1, 0]], dtype=complex) @ m
    if z:
        m = np.diag([1, -1]).astype(complex) @ m
    return m
