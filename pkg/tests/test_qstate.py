import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_amplitudes, same_ray
from moqc.errors import InputError
from moqc.qstate import (
    CZ_MATRIX,
    HADAMARD,
    P_INV_MATRIX,
    P_MATRIX,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    Gate,
    StateVector,
    apply_gate,
    cz_variant_matrix,
    equal_up_to_global_phase,
    j_matrix,
    make_basis_state,
    normalize_angle,
    plus_theta_state,
    random_state,
    random_unitary,
    split_product,
    zrot_matrix,
)

I2 = np.eye(2)
k0 = np.array([1, 0], dtype=complex)
k1 = np.array([0, 1], dtype=complex)
plus = (k0 + k1) / math.sqrt(2)
minus = (k0 - k1) / math.sqrt(2)


class TestBasisStates:
    @pytest.mark.parametrize(
        "n, bits, index",
        [(2, "00", 0), (1, "1", 1), (3, "101", 5), (3, "011", 3), (4, [1, 0, 0, 0], 8)],
    )
    def test_single_nonzero_amplitude(self, n, bits, index):
        s = make_basis_state(n, bits)
        expected = np.zeros(2**n)
        expected[index] = 1
        np.testing.assert_array_equal(s.amplitudes, expected)
        assert s.num_qubits == n

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            make_basis_state(2, "1")

    def test_bad_symbol(self):
        with pytest.raises(InputError):
            make_basis_state(2, "0a")


class TestPlusTheta:
    def test_plus(self):
        np.testing.assert_allclose(plus_theta_state(0).amplitudes, plus, atol=1e-15)

    def test_y_basis(self):
        np.testing.assert_allclose(
            plus_theta_state(math.pi / 2).amplitudes, (k0 + 1j * k1) / math.sqrt(2), atol=1e-15
        )

    def test_minus(self):
        np.testing.assert_allclose(plus_theta_state(math.pi).amplitudes, minus, atol=1e-15)

    def test_minus_flag(self):
        t = 0.7
        a = plus_theta_state(t).amplitudes
        b = plus_theta_state(t, minus=True).amplitudes
        assert abs(np.vdot(a, b)) < 1e-15
        np.testing.assert_allclose(b, (k0 - np.exp(1j * t) * k1) / math.sqrt(2), atol=1e-15)

    def test_angle_reduced(self):
        np.testing.assert_allclose(
            plus_theta_state(0.3 + 4 * math.pi).amplitudes, plus_theta_state(0.3).amplitudes, atol=1e-12
        )


class TestStateVector:
    def test_rejects_bad_length(self):
        with pytest.raises(InputError):
            StateVector(np.ones(3))

    def test_rejects_zero(self):
        with pytest.raises(InputError):
            StateVector(np.zeros(4))

    def test_rejects_unnormalized(self):
        with pytest.raises(InputError):
            StateVector(np.array([3, 4j]))

    def test_norm_within_tolerance(self):
        s = StateVector(np.array([0.6, 0.8j]))
        assert abs(s.norm() - 1) < 1e-12

    def test_read_only(self):
        s = make_basis_state(1, "0")
        with pytest.raises(ValueError):
            s.amplitudes[0] = 2

    def test_tensor_is_kron(self, rng):
        a = random_state(1, rng)
        b = random_state(2, rng)
        np.testing.assert_allclose(a.tensor(b).amplitudes, np.kron(a.amplitudes, b.amplitudes))


class TestGateMatrices:
    @pytest.mark.parametrize("kind", ["H", "P", "PINV", "X", "Y", "Z", "I", "CZ", "CZV"])
    def test_unitary(self, kind):
        m = Gate(kind).matrix
        np.testing.assert_allclose(m.conj().T @ m, np.eye(len(m)), atol=1e-12)

    @pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 4, 2.0, 6.0])
    def test_j_is_h_times_zrot(self, theta):
        np.testing.assert_allclose(j_matrix(theta), HADAMARD @ zrot_matrix(theta), atol=1e-12)

    def test_j0_is_hadamard(self):
        np.testing.assert_array_equal(j_matrix(0.0), HADAMARD)

    def test_pinv_is_z_times_p(self):
        np.testing.assert_allclose(P_INV_MATRIX, PAULI_Z @ P_MATRIX, atol=1e-12)
        np.testing.assert_allclose(P_INV_MATRIX @ P_MATRIX, I2, atol=1e-12)

    def test_h_j_pi4_squared_is_p(self):
        m = HADAMARD @ j_matrix(math.pi / 4)
        np.testing.assert_allclose(m @ m, P_MATRIX, atol=1e-12)

    def test_hadamard_squared(self):
        np.testing.assert_allclose(HADAMARD @ HADAMARD, I2, atol=1e-12)

    def test_cz_variant_definition(self):
        # (P^-1 (x) H P^-1) CZ (I (x) H), built from literal entries
        h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        pinv = np.diag([1, -1j])
        u = np.kron(pinv, h @ pinv) @ np.diag([1, 1, 1, -1]) @ np.kron(I2, h)
        np.testing.assert_allclose(cz_variant_matrix(), u, atol=1e-12)

    def test_cz_variant_conjugated(self):
        ih = np.kron(I2, HADAMARD)
        lhs = ih @ cz_variant_matrix() @ ih
        rhs = np.kron(P_INV_MATRIX, P_INV_MATRIX) @ CZ_MATRIX
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_angle_gate_needs_theta(self):
        with pytest.raises(InputError):
            Gate("J")

    def test_unknown_kind(self):
        with pytest.raises(InputError):
            Gate("T")

    def test_from_matrix_rejects_non_unitary(self):
        with pytest.raises(InputError):
            Gate.from_matrix(np.array([[1, 1], [0, 1]]))

    def test_theta_normalized(self):
        assert Gate("J", -math.pi / 2).theta == pytest.approx(3 * math.pi / 2)


class TestNormalizeAngle:
    @pytest.mark.parametrize(
        "theta, expected",
        [(0.0, 0.0), (-0.5, 2 * math.pi - 0.5), (7.0, 7.0 - 2 * math.pi), (2 * math.pi - 1e-15, 0.0)],
    )
    def test_range(self, theta, expected):
        assert normalize_angle(theta) == pytest.approx(expected, abs=1e-12)


class TestApplyGate:
    def test_h_on_zero(self):
        out = apply_gate(make_basis_state(1, "0"), Gate("H"), (1,))
        np.testing.assert_allclose(out.amplitudes, plus, atol=1e-15)

    @pytest.mark.parametrize("theta", [0.0, 0.4, math.pi / 4, 1.234])
    def test_j_on_general_qubit(self, theta, rng):
        a, b = random_amplitudes(rng, 2)
        out = apply_gate(StateVector(a * k0 + b * k1), Gate("J", theta), (1,))
        expected = a * plus + np.exp(1j * theta) * b * minus
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-12)

    def test_cz_variant_four_term_form(self, rng):
        al, be, ga, de = random_amplitudes(rng, 4)
        out = apply_gate(StateVector(np.array([al, be, ga, de])), Gate("CZV"), (1, 2))
        r2 = math.sqrt(2)
        mi = (plus - 1j * minus) / r2
        pi_ = (plus + 1j * minus) / r2
        expected = (
            al * np.kron(k0, mi) + be * np.kron(k0, pi_) - 1j * ga * np.kron(k1, pi_) - 1j * de * np.kron(k1, mi)
        )
        assert same_ray(out.amplitudes, expected, 1e-12)

    def test_qubit_one_is_most_significant(self):
        out = apply_gate(make_basis_state(2, "00"), Gate("X"), (1,))
        np.testing.assert_array_equal(out.amplitudes, [0, 0, 1, 0])

    def test_target_order_matters(self):
        s = make_basis_state(2, "01")
        a = apply_gate(s, Gate("CZV"), (1, 2)).amplitudes
        b = apply_gate(s, Gate("CZV"), (2, 1)).amplitudes
        swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
        np.testing.assert_allclose(b, swap @ cz_variant_matrix() @ swap @ s.amplitudes, atol=1e-12)
        assert not np.allclose(a, b)

    def test_embedding_matches_kron(self, rng):
        s = random_state(3, rng)
        out = apply_gate(s, Gate("Y"), (2,))
        np.testing.assert_allclose(out.amplitudes, np.kron(np.kron(I2, PAULI_Y), I2) @ s.amplitudes, atol=1e-12)

    @pytest.mark.parametrize(
        "targets", [(0,), (3,), (1, 1)]
    )
    def test_bad_targets(self, targets):
        gate = Gate("CZ") if len(targets) == 2 else Gate("H")
        with pytest.raises(InputError):
            apply_gate(make_basis_state(2, "00"), gate, targets)

    def test_arity_mismatch(self):
        with pytest.raises(InputError):
            apply_gate(make_basis_state(2, "00"), Gate("CZ"), (1,))

    def test_h_twice_is_identity(self, rng):
        for _ in range(50):
            s = random_state(3, rng)
            q = int(rng.integers(1, 4))
            out = apply_gate(apply_gate(s, Gate("H"), (q,)), Gate("H"), (q,))
            np.testing.assert_allclose(out.amplitudes, s.amplitudes, atol=1e-12)

    def test_norm_preserved_1000_cases(self, rng):
        kinds = ["H", "P", "PINV", "X", "Y", "Z", "CZ", "CZV", "J", "ZROT", "U1"]
        for _ in range(1000):
            n = int(rng.integers(2, 5))
            s = random_state(n, rng)
            kind = kinds[rng.integers(len(kinds))]
            if kind in ("J", "ZROT"):
                gate = Gate(kind, float(rng.uniform(0, 2 * math.pi)))
            elif kind == "U1":
                gate = Gate.from_matrix(random_unitary(2, rng))
            else:
                gate = Gate(kind)
            targets = tuple(int(t) + 1 for t in rng.choice(n, size=gate.arity, replace=False))
            out = apply_gate(s, gate, targets)
            assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12


class TestGlobalPhase:
    def test_phase_invariant(self, rng):
        psi = random_state(2, rng)
        rotated = StateVector(np.exp(1j * math.pi / 7) * psi.amplitudes)
        assert equal_up_to_global_phase(psi, rotated, 1e-9)

    def test_orthogonal(self):
        assert not equal_up_to_global_phase(make_basis_state(1, "0"), make_basis_state(1, "1"), 1e-9)

    def test_zx_is_y_up_to_phase(self):
        zx = StateVector(PAULI_Z @ PAULI_X @ plus)
        y = StateVector(PAULI_Y @ plus)
        assert equal_up_to_global_phase(zx, y, 1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            equal_up_to_global_phase(make_basis_state(1, "0"), make_basis_state(2, "00"))

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0, 2 * math.pi), st.integers(0, 2**32 - 1))
    def test_phase_property(self, phase, seed):
        psi = random_state(2, np.random.default_rng(seed))
        assert equal_up_to_global_phase(psi, StateVector(np.exp(1j * phase) * psi.amplitudes))


class TestRandomUnitary:
    def test_unitary(self, rng):
        for dim in (2, 4, 8):
            u = random_unitary(dim, rng)
            np.testing.assert_allclose(u.conj().T @ u, np.eye(dim), atol=1e-12)


class TestSplitProduct:
    def test_recovers_factor(self, rng):
        a = random_state(1, rng)
        b = random_state(2, rng)
        full = a.tensor(b)
        kept, rest = split_product(full, (2, 3))
        assert same_ray(kept.amplitudes, b.amplitudes)
        assert same_ray(rest.amplitudes, a.amplitudes)

    def test_reorders_kept_qubits(self):
        full = make_basis_state(3, "100")
        kept, _ = split_product(full, (3, 1))
        np.testing.assert_allclose(abs(kept.amplitudes), [0, 1, 0, 0], atol=1e-12)

    def test_entangled_raises(self):
        bell = StateVector(np.array([1, 0, 0, 1]) / math.sqrt(2))
        with pytest.raises(InputError):
            split_product(bell, (1,))
