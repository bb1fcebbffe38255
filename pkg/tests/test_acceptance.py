"""Acceptance checks, one test per criterion; each prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import itertools
import math
import time
from collections import defaultdict

import numpy as np
import pytest

from conftest import factor_out, pauli_power, random_amplitudes, same_ray
from moqc.circuit import circuit_from_ops
from moqc.compiler import compile_circuit, verify_program
from moqc.graphstate import (
    Graph,
    needs_sigma_z,
    prepare_graph_state,
    random_graph,
    standard_graph_state,
)
from moqc.measurement import ZX, Observable, ObservableSet, Y
from moqc.protocols import (
    apply_pauli,
    cz_variant_procedure,
    enumerate_procedure,
    j_procedure,
    x_round_procedure,
    z_round_procedure,
)
from moqc.qstate import (
    CZ_MATRIX,
    HADAMARD,
    P_INV_MATRIX,
    P_MATRIX,
    PAULI_Z,
    StateVector,
    cz_variant_matrix,
    fidelity,
    j_matrix,
    zero_state,
)

pytestmark = pytest.mark.acceptance

STATE_TOL = 1e-9
MATRIX_TOL = 1e-12
k0 = np.array([1, 0], dtype=complex)


def verdict(number, title, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail}", flush=True)
    assert ok, detail


def class_masses(branches):
    masses = defaultdict(float)
    for branch, bp in branches:
        masses[bp.label] += branch.probability
    return dict(masses)


def all_graphs(n):
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    for mask in range(2 ** len(pairs)):
        yield Graph(n, tuple(p for i, p in enumerate(pairs) if mask >> i & 1))


def test_criterion_1_j_simulation():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_state, worst_mass, branches_seen = 0.0, 0.0, 0
    labels_ok = True
    for theta in (0.0, math.pi / 4, math.pi / 2, 1.234):
        u = j_matrix(theta)
        for _ in range(20):
            phi = random_amplitudes(rng, 2)
            branches = enumerate_procedure(StateVector(np.kron(phi, k0)), j_procedure(theta, 1, 2))
            branches_seen += len(branches)
            for branch, bp in branches:
                z, x = bp.on(2)
                got = factor_out(branch.state.amplitudes, [2])
                worst_state = max(worst_state, 1 - abs(np.vdot(pauli_power(z, x) @ u @ phi, got)))
            masses = class_masses(branches)
            labels_ok &= sorted(masses) == ["I", "X", "Z", "ZX"]
            worst_mass = max(worst_mass, max(abs(v - 0.25) for v in masses.values()))
    elapsed = time.perf_counter() - start
    ok = branches_seen == 4 * 20 * 8 and labels_ok and worst_state <= STATE_TOL and worst_mass <= STATE_TOL and elapsed < 1.0
    verdict(
        1,
        "J(theta) simulation, all branches",
        ok,
        f"{branches_seen} branches, max 1-overlap {worst_state:.2e}, max |class mass - 1/4| {worst_mass:.2e}, "
        f"{elapsed:.3f} s",
    )


def test_criterion_2_cz_variant_simulation():
    rng = np.random.default_rng(202)
    u = cz_variant_matrix()
    worst_state, worst_mass, counts_ok, labels_ok = 0.0, 0.0, True, True
    for _ in range(20):
        phi = random_amplitudes(rng, 4)
        branches = enumerate_procedure(StateVector(np.kron(phi, k0)), cz_variant_procedure(1, 2, 3))
        counts_ok &= len(branches) == 16
        for branch, bp in branches:
            sigma = np.kron(pauli_power(*bp.on(1)), pauli_power(*bp.on(2)))
            got = factor_out(branch.state.amplitudes, [1, 2])
            worst_state = max(worst_state, 1 - abs(np.vdot(sigma @ u @ phi, got)))
        masses = class_masses(branches)
        labels_ok &= sorted(masses) == ["I⊗I", "I⊗X", "Z⊗I", "Z⊗X"]
        worst_mass = max(worst_mass, max(abs(v - 0.25) for v in masses.values()))
    ok = counts_ok and labels_ok and worst_state <= STATE_TOL and worst_mass <= STATE_TOL
    verdict(
        2,
        "two-qubit gate simulation, all branches",
        ok,
        f"16 branches per input: {counts_ok}, max 1-overlap {worst_state:.2e}, "
        f"max |class mass - 1/4| {worst_mass:.2e}",
    )


def test_criterion_3_correction_rounds():
    rng = np.random.default_rng(303)
    worst_success, worst_failure = 0.0, 0.0
    for proc in (x_round_procedure(1, 2), z_round_procedure(1, 2)):
        for _ in range(20):
            phi = random_amplitudes(rng, 2)
            branches = enumerate_procedure(StateVector(np.kron(phi, k0)), proc)
            success = sum(b.probability for b, bp in branches if not bp.is_identity)
            worst_success = max(worst_success, abs(success - 0.5))
            for b, bp in branches:
                if bp.is_identity:
                    got = factor_out(b.state.amplitudes, [1])
                    worst_failure = max(worst_failure, 1 - abs(np.vdot(phi, got)))

    runs = 100_000
    sampler = np.random.default_rng(304)
    start = zero_state(2)
    total = 0
    for i in range(runs):
        total += apply_pauli(start, "X" if i % 2 == 0 else "Z", 1, 2, sampler).rounds_used
    mean = total / runs
    ok = worst_success <= STATE_TOL and worst_failure <= STATE_TOL and abs(mean - 2) <= 0.05 * 2
    verdict(
        3,
        "correction rounds",
        ok,
        f"max |P(success) - 1/2| {worst_success:.2e}, failure 1-overlap {worst_failure:.2e}, "
        f"mean rounds {mean:.4f} over {runs} runs",
    )


def test_criterion_4_s2_mode_audit():
    rng = np.random.default_rng(404)
    allowed = {Y, Observable.planar(math.pi / 4), ZX}
    violations, foreign, programs = 0, set(), 0
    for _ in range(40):
        n = int(rng.integers(1, 4))
        ops = []
        for _ in range(int(rng.integers(1, 9))):
            pick = rng.integers(3 if n > 1 else 2)
            if pick == 2:
                q1, q2 = (int(q) + 1 for q in rng.choice(n, size=2, replace=False))
                ops.append(("CZV", (q1, q2)))
            elif pick == 1:
                ops.append(("J", int(rng.integers(1, n + 1)), math.pi / 4))
            else:
                ops.append(("H", int(rng.integers(1, n + 1))))
        c = circuit_from_ops(n, ops)
        prog = compile_circuit(c, ObservableSet.S2)
        programs += 1
        violations += len(prog.audit(ObservableSet.S2))
        foreign |= set(prog.observables()) - allowed
    ok = violations == 0 and not foreign
    verdict(4, "S2 mode audit", ok, f"{programs} programs, {violations} violations, {len(foreign)} foreign observables")


def test_criterion_5_graph_states():
    start = time.perf_counter()
    graphs = list(all_graphs(4))
    rng = np.random.default_rng(505)
    graphs += [random_graph(6, 0.5, rng) for _ in range(20)]
    worst, bad_obs, bad_qubits, runs = 0.0, 0, 0, 0
    for gi, g in enumerate(graphs):
        oracle = standard_graph_state(g)
        for seed in range(50):
            res = prepare_graph_state(g, np.random.default_rng([gi, seed]))
            worst = max(worst, 1 - fidelity(res.vertex_state(), oracle))
            bad_obs += sum(e.observable not in (Y, ZX) for e in res.transcript.measurements)
            bad_qubits += res.state.num_qubits != g.n + 1
            runs += 1
    elapsed = time.perf_counter() - start
    ok = worst <= STATE_TOL and bad_obs == 0 and bad_qubits == 0 and elapsed < 120
    verdict(
        5,
        "graph-state preparation",
        ok,
        f"{len(graphs)} graphs x 50 runs = {runs}, max 1-fidelity {worst:.2e}, "
        f"{bad_obs} non-S3 measurements, {bad_qubits} runs with extra qubits, {elapsed:.1f} s",
    )


def test_criterion_6_degree_table():
    preps = {
        (0, 1): np.array([1, 1]) / math.sqrt(2),
        (0, -1): np.array([1, -1]) / math.sqrt(2),
        (1, 1): np.array([1, 1j]) / math.sqrt(2),
        (1, -1): np.array([1, -1j]) / math.sqrt(2),
    }
    target = HADAMARD @ k0
    mismatches = []
    for deg in range(8):
        for outcome in (1, -1):
            v = np.linalg.matrix_power(P_INV_MATRIX, deg) @ preps[(deg % 2, outcome)]
            b = [b for b in (0, 1) if same_ray(v, np.linalg.matrix_power(PAULI_Z, b) @ target, MATRIX_TOL)]
            if len(b) != 1 or needs_sigma_z(deg, outcome) is not bool(b[0]):
                mismatches.append((deg, outcome))
    verdict(6, "degree-mod-4 correction table", not mismatches, f"16 cases, mismatches {mismatches}")


def test_criterion_7_compiler_end_to_end():
    rng = np.random.default_rng(707)
    worst, failures = 0.0, 0
    for i in range(50):
        n = int(rng.integers(1, 4))
        ops = []
        for _ in range(int(rng.integers(1, 7))):
            if n > 1 and rng.random() < 0.4:
                q1, q2 = (int(q) + 1 for q in rng.choice(n, size=2, replace=False))
                ops.append(("CZ", (q1, q2)))
            else:
                ops.append(("J", int(rng.integers(1, n + 1)), float(rng.uniform(0, 2 * math.pi))))
        rep = verify_program(circuit_from_ops(n, ops), trials=20, seed=i)
        worst = max(worst, 1 - rep.min_fidelity)
        failures += len(rep.failures)
    ok = worst <= STATE_TOL and failures == 0
    verdict(7, "compiler end to end", ok, f"50 circuits x 20 seeds, max 1-fidelity {worst:.2e}, {failures} failures")


def test_criterion_8_size_scaling():
    rng = np.random.default_rng(808)
    xs, ys = [], []
    for n in range(4, 9):
        for _ in range(20):
            g = random_graph(n, 0.5, rng, connected=True)
            sizes = [prepare_graph_state(g, rng).metrics.size for _ in range(5)]
            xs.append(g.n + g.m)
            ys.append(float(np.mean(sizes)))
    x, y = np.array(xs, dtype=float), np.array(ys)
    c = float(x @ y / (x @ x))
    residual = float(np.linalg.norm(y - c * x) / np.linalg.norm(y))
    ok = residual < 0.15
    verdict(8, "size scaling", ok, f"{len(xs)} graphs, fitted c = {c:.3f}, relative residual {residual:.3f}")


def test_criterion_9_identities():
    I2 = np.eye(2)
    ih = np.kron(I2, HADAMARD)
    checks = {
        "(I(x)H)U(I(x)H) = (P^-1(x)P^-1)CZ": np.max(
            np.abs(ih @ cz_variant_matrix() @ ih - np.kron(P_INV_MATRIX, P_INV_MATRIX) @ CZ_MATRIX)
        ),
        "(H J(pi/4))^2 = P": np.max(np.abs(np.linalg.matrix_power(HADAMARD @ j_matrix(math.pi / 4), 2) - P_MATRIX)),
        "J(0) = H": np.max(np.abs(j_matrix(0.0) - HADAMARD)),
        "P^-1 = Z P": np.max(np.abs(P_INV_MATRIX - PAULI_Z @ P_MATRIX)),
    }
    ok = all(v <= MATRIX_TOL for v in checks.values())
    verdict(9, "algebraic identities", ok, ", ".join(f"{k}: {v:.1e}" for k, v in checks.items()))
