"""Compile gate circuits into measurement programs and check the result.

Lowering rules (right-most factor is applied first):

* ``J(t)``                -> one J simulation step
* ``H``                   -> ``J(0)``
* ``ZROT(t)``             -> ``J(0) J(t)``; ``P`` and ``PINV`` are ``ZROT(pi/2)`` and ``ZROT(3pi/2)``
* ``U1``                  -> ``J(0) J(a) J(b) J(c)`` from :func:`decompose_1q`
* ``X``, ``Y``, ``Z``     -> an unconditional correction block
* ``CZV``                 -> one CZ-variant simulation step
* ``CZ q1 q2``            -> ``J(0)`` on q2, CZV, ``J(0)`` on q2, giving
  ``(P^-1 (x) P^-1) CZ``, then ``P = J(0) J(pi/2)`` on both qubits

Every simulation step is followed by conditional corrections that undo its
byproduct before the next step runs.
"""

from __future__ import annotations

import cmath
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit
from .errors import InputError, LegalityError, NonTerminationError
from .measurement import ObservableSet
from .program import Correction, Measure, MeasurementProgram, Relocation, execute
from .protocols import DEFAULT_MAX_ROUNDS, Procedure, cz_variant_procedure, j_procedure
from .qstate import I2, fidelity, j_matrix, normalize_angle, random_state

_DEGENERATE = 1e-12


def decompose_1q(u) -> tuple[float, float, float, float]:
    """Angles ``(phase, a, b, c)`` with ``U = e^{i phase} J(0) J(a) J(b) J(c)``.

    Since ``J(0) J(a) = Z(a)`` and ``H Z(b) H`` is an X rotation, this is the
    Z-X-Z Euler form written in J factors. All angles lie in ``[0, 2pi)``.
    When the middle angle is 0 or pi the split between ``a`` and ``c`` is
    not unique; ``c`` is then set to 0.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, I2, atol=1e-10):
        raise InputError("decompose_1q needs a 2x2 unitary")
    v = u / cmath.sqrt(np.linalg.det(u))
    # v = Rz(a) Rx(b) Rz(c) up to sign
    b = 2.0 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(v[1, 0]) < _DEGENERATE:
        a, c = 2.0 * cmath.phase(v[1, 1]), 0.0
    elif abs(v[0, 0]) < _DEGENERATE:
        a, c = 2.0 * cmath.phase(1j * v[1, 0]), 0.0
    else:
        plus = 2.0 * cmath.phase(v[1, 1])
        minus = 2.0 * cmath.phase(1j * v[1, 0])
        a, c = (plus + minus) / 2.0, (plus - minus) / 2.0
    a, b, c = normalize_angle(a), normalize_angle(b), normalize_angle(c)
    m = j_factors(0.0, a, b, c)
    i, k = np.unravel_index(np.argmax(np.abs(m)), m.shape)
    phase = normalize_angle(cmath.phase(u[i, k] / m[i, k]))
    return phase, a, b, c


def j_factors(*angles: float) -> np.ndarray:
    """Matrix product ``J(angles[0]) J(angles[1]) ...``."""
    m = I2
    for t in angles:
        m = m @ j_matrix(t)
    return m


# Lowering ------------------------------------------------------------------------


class _Emitter:
    def __init__(self, num_logical: int, mode: ObservableSet, max_rounds: int):
        self.program = MeasurementProgram(num_logical, [], mode)
        self.mapping = list(range(1, num_logical + 1))
        self.measured = 0
        self.max_rounds = max_rounds
        self.mode = mode

    @property
    def free(self) -> int:
        used = set(self.mapping)
        return next(p for p in range(1, self.program.num_physical + 1) if p not in used)

    def _emit_procedure(self, proc: Procedure, gate) -> int:
        for obs, targets in proc.instructions:
            if not self.mode.admits(obs):
                raise LegalityError(
                    f"gate {gate} needs observable {obs}, which is not in {self.mode.value}",
                    gate,
                )
        base = self.measured
        for obs, targets in proc.instructions:
            self.program.steps.append(Measure(obs, targets))
        self.measured += proc.size
        return base

    def _emit_corrections(self, proc: Procedure, base: int, physical_to_logical):
        for rule in proc.rules:
            refs = tuple(base + r for r in rule.refs)
            self.program.steps.append(
                Correction(rule.pauli, physical_to_logical[rule.qubit], self.max_rounds, (rule.const, refs))
            )

    def j(self, logical: int, theta: float, gate) -> None:
        src, anc = self.mapping[logical - 1], self.free
        proc = j_procedure(theta, src, anc)
        base = self._emit_procedure(proc, gate)
        self.program.steps.append(Relocation(logical, anc))
        self.mapping[logical - 1] = anc
        self._emit_corrections(proc, base, {anc: logical})

    def cz_variant(self, l1: int, l2: int, gate) -> None:
        p1, p2 = self.mapping[l1 - 1], self.mapping[l2 - 1]
        proc = cz_variant_procedure(p1, p2, self.free)
        base = self._emit_procedure(proc, gate)
        self._emit_corrections(proc, base, {p1: l1, p2: l2})

    def pauli(self, pauli: str, logical: int) -> None:
        self.program.steps.append(Correction(pauli, logical, self.max_rounds))


def compile_circuit(
    circuit: Circuit,
    mode: ObservableSet | str = ObservableSet.S1,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> MeasurementProgram:
    """Lower ``circuit`` to a measurement program restricted to ``mode``.

    Raises
    ------
    LegalityError
        Some gate needs an observable outside ``mode`` (for instance
        ``J(0.3)`` needs ``Planar(pi/2 - 0.3)``, which S2 and S3 lack).
    """
    if isinstance(mode, str):
        mode = ObservableSet.from_name(mode)
    em = _Emitter(circuit.num_qubits, mode, max_rounds)
    for gate, targets in circuit.gates:
        kind = gate.kind
        if kind == "J":
            em.j(targets[0], gate.theta, gate)
        elif kind == "H":
            em.j(targets[0], 0.0, gate)
        elif kind in ("ZROT", "P", "PINV"):
            theta = {"P": math.pi / 2, "PINV": 3 * math.pi / 2}.get(kind, gate.theta)
            em.j(targets[0], theta, gate)
            em.j(targets[0], 0.0, gate)
        elif kind in ("X", "Y", "Z"):
            em.pauli(kind, targets[0])
        elif kind == "I":
            pass
        elif kind == "U1":
            _, a, b, c = decompose_1q(gate.unitary)
            if a or b or c:
                for t in (c, b, a, 0.0):
                    em.j(targets[0], t, gate)
        elif kind == "CZV":
            em.cz_variant(targets[0], targets[1], gate)
        elif kind == "CZ":
            q1, q2 = targets
            em.j(q2, 0.0, gate)
            em.cz_variant(q1, q2, gate)
            em.j(q2, 0.0, gate)
            for q in (q1, q2):
                em.j(q, math.pi / 2, gate)
                em.j(q, 0.0, gate)
        else:
            raise InputError(f"unsupported gate kind {kind!r}")
    return em.program


# Verification ----------------------------------------------------------------------


@dataclass
class VerificationReport:
    trials: int
    fidelities: list[float] = field(default_factory=list)
    byproduct_frequencies: dict[str, dict[str, float]] = field(default_factory=dict)
    audit_violations: int = 0
    mode: str = ObservableSet.S1.value
    failures: list[str] = field(default_factory=list)
    measurements: list[int] = field(default_factory=list)

    @property
    def min_fidelity(self) -> float:
        return min(self.fidelities) if self.fidelities else 1.0

    def passed(self, tol: float = 1e-9) -> bool:
        return not self.failures and self.audit_violations == 0 and self.min_fidelity >= 1 - tol


def verify_program(
    circuit: Circuit,
    trials: int,
    seed: int,
    mode: ObservableSet | str = ObservableSet.S1,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> VerificationReport:
    """Execute the compiled circuit on ``trials`` random inputs and compare with the gate oracle.

    Failures (non-termination, entangled leftovers) are collected in the
    report rather than raised.
    """
    if isinstance(mode, str):
        mode = ObservableSet.from_name(mode)
    program = compile_circuit(circuit, mode, max_rounds)
    report = VerificationReport(trials, mode=mode.value, audit_violations=len(program.audit()))
    counts: dict[str, Counter] = defaultdict(Counter)
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(child)
        phi = random_state(circuit.num_qubits, rng)
        try:
            res = execute(program, phi, rng)
            got = res.logical_state()
        except (NonTerminationError, InputError) as err:
            report.failures.append(f"trial {i}: {err}")
            report.fidelities.append(0.0)
            continue
        report.fidelities.append(fidelity(got, circuit.simulate(phi)))
        report.measurements.append(len(res.transcript))
        for ev in res.byproducts:
            counts[ev.signature][ev.label] += 1
    for sig, c in counts.items():
        total = sum(c.values())
        report.byproduct_frequencies[sig] = {k: v / total for k, v in sorted(c.items())}
    return report
