"""Dense pure-state simulator.

Conventions
-----------
* Qubits are labelled ``1..n`` in every public function. Qubit 1 is the most
  significant bit of the basis index, so ``|q1 q2 ... qn>`` reads left to right
  exactly as written in ket notation: ``|101>`` is index ``0b101 = 5``.
* Internally qubit ``q`` is tensor axis ``q - 1``.
* States compare up to a global phase through the overlap ``|<a|b>|``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import InputError

TWO_PI = 2.0 * math.pi
NORM_TOL = 1e-12

# Standard matrices -------------------------------------------------------

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)
CZ_MATRIX = np.diag([1, 1, 1, -1]).astype(complex)


def zrot_matrix(theta: float) -> np.ndarray:
    """Phase gate ``Z(theta) = diag(1, e^{i theta})``."""
    return np.array([[1, 0], [0, cmath.exp(1j * theta)]], dtype=complex)


def j_matrix(theta: float) -> np.ndarray:
    """``J(theta) = H Z(theta)``."""
    return HADAMARD @ zrot_matrix(theta)


P_MATRIX = zrot_matrix(math.pi / 2)
P_INV_MATRIX = np.array([[1, 0], [0, -1j]], dtype=complex)


def cz_variant_matrix() -> np.ndarray:
    """The two-qubit gate ``(P^-1 (x) H P^-1) CZ (I (x) H)``.

    This is the entangling gate that the four-measurement procedure in
    :func:`moqc.protocols.sim_cz_variant` implements directly.
    """
    left = np.kron(P_INV_MATRIX, HADAMARD @ P_INV_MATRIX)
    right = np.kron(I2, HADAMARD)
    return left @ CZ_MATRIX @ right


def normalize_angle(theta: float) -> float:
    """Reduce an angle to ``[0, 2*pi)``, snapping values within 1e-12 of 2*pi to 0."""
    t = math.fmod(float(theta), TWO_PI)
    if t < 0:
        t += TWO_PI
    if TWO_PI - t < 1e-12 or t < 1e-15:
        t = 0.0
    return t


# Gates -------------------------------------------------------------------

_ONE_QUBIT = {"H", "ZROT", "P", "PINV", "X", "Y", "Z", "J", "I", "U1"}
_TWO_QUBIT = {"CZ", "CZV"}
_ANGLED = {"ZROT", "J"}
GATE_KINDS = frozenset(_ONE_QUBIT | _TWO_QUBIT)


@dataclass(frozen=True)
class Gate:
    """A gate kind plus its parameters.

    ``kind`` is one of ``H, ZROT, P, PINV, X, Y, Z, J, I, CZ, CZV, U1``.
    ``ZROT`` and ``J`` take ``theta``; ``U1`` carries an explicit 2x2 unitary
    as a nested tuple. ``CZV`` is ``(P^-1 (x) H P^-1) CZ (I (x) H)``.
    """

    kind: str
    theta: float | None = None
    unitary: tuple[tuple[complex, complex], tuple[complex, complex]] | None = field(
        default=None, repr=False
    )

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise InputError(f"unsupported gate kind {self.kind!r}")
        if self.kind in _ANGLED:
            if self.theta is None:
                raise InputError(f"gate {self.kind} needs an angle")
            object.__setattr__(self, "theta", normalize_angle(self.theta))
        elif self.theta is not None:
            raise InputError(f"gate {self.kind} takes no angle")
        if self.kind == "U1":
            if self.unitary is None:
                raise InputError("U1 gate needs a 2x2 unitary")
            m = np.asarray(self.unitary, dtype=complex)
            if m.shape != (2, 2):
                raise InputError("U1 gate needs a 2x2 unitary")
            if not np.allclose(m.conj().T @ m, I2, atol=1e-10):
                raise InputError("U1 matrix is not unitary")
            object.__setattr__(
                self, "unitary", tuple(tuple(complex(v) for v in row) for row in m)
            )

    @classmethod
    def from_matrix(cls, matrix) -> "Gate":
        return cls("U1", unitary=tuple(map(tuple, np.asarray(matrix, dtype=complex))))

    @property
    def arity(self) -> int:
        return 2 if self.kind in _TWO_QUBIT else 1

    @property
    def matrix(self) -> np.ndarray:
        return _gate_matrix(self).copy()

    def __str__(self) -> str:
        if self.theta is not None:
            return f"{self.kind}({self.theta:g})"
        return self.kind


@lru_cache(maxsize=512)
def _gate_matrix(gate: Gate) -> np.ndarray:
    kind = gate.kind
    if kind == "H":
        return HADAMARD
    if kind == "ZROT":
        return zrot_matrix(gate.theta)
    if kind == "J":
        return j_matrix(gate.theta)
    if kind == "P":
        return P_MATRIX
    if kind == "PINV":
        return P_INV_MATRIX
    if kind == "X":
        return PAULI_X
    if kind == "Y":
        return PAULI_Y
    if kind == "Z":
        return PAULI_Z
    if kind == "I":
        return I2
    if kind == "CZ":
        return CZ_MATRIX
    if kind == "CZV":
        return cz_variant_matrix()
    return np.array(gate.unitary, dtype=complex)


# States ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitudes over ``num_qubits`` qubits (qubit 1 = MSB).

    The amplitude array is copied and frozen on construction, so instances can
    be shared freely.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        dim = amps.size
        if dim < 2 or dim & (dim - 1):
            raise InputError(f"amplitude count {dim} is not a power of two >= 2")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-9:
            raise InputError(f"state is not normalized (norm {norm!r})")
        amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        _check_same_size(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self, other: "StateVector") -> "StateVector":
        """``|self> (x) |other>``; ``other``'s qubits are appended after ours."""
        return StateVector(np.kron(self.amplitudes, other.amplitudes))

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits}, amplitudes={np.round(self.amplitudes, 6)!r})"


def _check_same_size(a: StateVector, b: StateVector) -> None:
    if a.num_qubits != b.num_qubits:
        raise InputError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")


def make_basis_state(num_qubits: int, bits: str | Sequence[int]) -> StateVector:
    """Computational basis state ``|bits>``; ``bits[0]`` belongs to qubit 1."""
    if num_qubits < 1:
        raise InputError("num_qubits must be positive")
    bits = "".join(str(b) for b in bits)
    if len(bits) != num_qubits or set(bits) - {"0", "1"}:
        raise InputError(f"bitstring {bits!r} does not describe {num_qubits} qubits")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps)


def plus_theta_state(theta: float, minus: bool = False) -> StateVector:
    """``|+_theta> = (|0> + e^{i theta}|1>)/sqrt2``, or ``|-_theta>`` with ``minus=True``."""
    sign = -1.0 if minus else 1.0
    phase = cmath.exp(1j * normalize_angle(theta))
    return StateVector(np.array([1.0, sign * phase]) / math.sqrt(2.0))


def zero_state(num_qubits: int) -> StateVector:
    return make_basis_state(num_qubits, "0" * num_qubits)


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    v = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector(v / np.linalg.norm(v))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR factorisation of a complex Gaussian matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


# Gate application ----------------------------------------------------------


def check_targets(num_qubits: int, targets: Sequence[int], arity: int) -> tuple[int, ...]:
    """Validate 1-based targets and return the 0-based tensor axes."""
    targets = tuple(int(t) for t in targets)
    if len(targets) != arity:
        raise InputError(f"expected {arity} target qubit(s), got {len(targets)}")
    if len(set(targets)) != len(targets):
        raise InputError(f"target qubits must be distinct: {targets}")
    for t in targets:
        if not 1 <= t <= num_qubits:
            raise InputError(f"qubit {t} out of range 1..{num_qubits}")
    return tuple(t - 1 for t in targets)


def apply_matrix_raw(amps: np.ndarray, matrix: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Apply ``matrix`` to the tensor ``axes`` of ``amps`` (no validation, no renormalization).

    Used for both unitaries and projectors.
    """
    n = amps.size.bit_length() - 1
    k = len(axes)
    psi = amps.reshape((2,) * n)
    m = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(m, psi, axes=(list(range(k, 2 * k)), list(axes)))
    out = np.moveaxis(out, list(range(k)), list(axes))
    return out.reshape(-1)


def apply_unitary(state: StateVector, matrix: np.ndarray, targets: Sequence[int]) -> StateVector:
    matrix = np.asarray(matrix, dtype=complex)
    k = matrix.shape[0].bit_length() - 1
    axes = check_targets(state.num_qubits, targets, k)
    return StateVector(apply_matrix_raw(state.amplitudes, matrix, axes))


def apply_gate(state: StateVector, gate: Gate, targets: Sequence[int]) -> StateVector:
    """Apply ``gate`` to the (1-based, ordered) ``targets`` of ``state``.

    For two-qubit gates the first target is the left tensor factor.
    """
    axes = check_targets(state.num_qubits, targets, gate.arity)
    return StateVector(apply_matrix_raw(state.amplitudes, _gate_matrix(gate), axes))


# Comparison and factorisation ---------------------------------------------


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|``; equals 1 iff the states agree up to a global phase."""
    return abs(a.overlap(b))


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = 1e-9) -> bool:
    return fidelity(a, b) >= 1.0 - tol


def split_product(
    state: StateVector, keep: Sequence[int], tol: float = 1e-9
) -> tuple[StateVector, StateVector]:
    """Factor ``state`` as ``|kept> (x) |rest>``.

    ``keep`` lists 1-based qubits in the order they should appear in the
    returned ``kept`` state; ``rest`` holds the remaining qubits in ascending
    order. Raises :class:`InputError` if the split is not a product within
    ``tol`` (measured as ``1 - s0**2`` of the Schmidt spectrum).
    """
    n = state.num_qubits
    keep = tuple(int(q) for q in keep)
    axes = check_targets(n, keep, len(keep))
    rest_axes = [a for a in range(n) if a not in axes]
    if not rest_axes:
        raise InputError("split_product needs at least one qubit outside `keep`; use reorder")
    psi = np.transpose(state.amplitudes.reshape((2,) * n), list(axes) + rest_axes)
    mat = psi.reshape(2 ** len(axes), 2 ** len(rest_axes))
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    if 1.0 - s[0] ** 2 > tol:
        raise InputError(
            f"qubits {keep} are entangled with the rest (Schmidt weight {s[0] ** 2:.3e})"
        )
    return StateVector(u[:, 0]), StateVector(vh[0, :])


def reorder(state: StateVector, order: Sequence[int]) -> StateVector:
    """Permute qubits so that new qubit ``i+1`` is old qubit ``order[i]``."""
    n = state.num_qubits
    axes = check_targets(n, order, n)
    psi = np.transpose(state.amplitudes.reshape((2,) * n), list(axes))
    return StateVector(psi.reshape(-1))
