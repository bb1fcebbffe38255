"""Gate-level circuits and the ``.qc`` text format.

Format (UTF-8, one statement per line, ``#`` starts a comment)::

    qubits 2
    H 1
    J 1 0.785398163397
    CZ 1 2
    U1 2  re00 im00 re01 im01 re10 im10 re11 im11

Besides ``J``, ``CZ``, ``H`` and ``U1`` the parser accepts ``CZV q1 q2``
(the gate ``(P^-1 (x) H P^-1) CZ (I (x) H)``), ``ZROT q theta``, ``P q``,
``PINV q``, ``X q``, ``Y q``, ``Z q`` and ``I q``. Qubits are 1-based and
angles are radians.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, ParseError
from .qstate import Gate, StateVector, apply_gate, check_targets

_SIMPLE_1Q = {"H", "P", "PINV", "X", "Y", "Z", "I"}


@dataclass
class Circuit:
    """Ordered gate applications on ``num_qubits`` logical qubits."""

    num_qubits: int
    gates: list[tuple[Gate, tuple[int, ...]]] = field(default_factory=list)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise InputError("a circuit needs at least one qubit")
        gates, self.gates = self.gates, []
        for g, t in gates:
            self.append(g, t)

    def append(self, gate: Gate, targets: Sequence[int]) -> "Circuit":
        targets = tuple(int(t) for t in targets)
        check_targets(self.num_qubits, targets, gate.arity)
        self.gates.append((gate, targets))
        return self

    def __len__(self) -> int:
        return len(self.gates)

    def simulate(self, state: StateVector) -> StateVector:
        """Reference gate-by-gate evolution of ``state``."""
        if state.num_qubits != self.num_qubits:
            raise InputError(
                f"input has {state.num_qubits} qubits, circuit has {self.num_qubits}"
            )
        for gate, targets in self.gates:
            state = apply_gate(state, gate, targets)
        return state

    def unitary(self) -> np.ndarray:
        dim = 2**self.num_qubits
        cols = []
        for i in range(dim):
            e = np.zeros(dim, dtype=complex)
            e[i] = 1
            cols.append(self.simulate(StateVector(e)).amplitudes)
        return np.array(cols).T


def parse_circuit(text: str) -> Circuit:
    """Parse the ``.qc`` format. Errors carry the 1-based line number."""
    circuit: Circuit | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        op = tok[0].upper()
        if circuit is None:
            if op != "QUBITS" or len(tok) != 2:
                raise ParseError("expected header 'qubits N'", lineno)
            try:
                circuit = Circuit(int(tok[1]))
            except (ValueError, InputError) as err:
                raise ParseError(f"bad qubit count: {err}", lineno) from None
            continue
        try:
            gate, targets = _parse_gate(op, tok[1:])
            circuit.append(gate, targets)
        except ParseError as err:
            raise ParseError(str(err), lineno) from None
        except (ValueError, InputError) as err:
            raise ParseError(f"{op}: {err}", lineno) from None
    if circuit is None:
        raise ParseError("missing header 'qubits N'", 1)
    return circuit


def _parse_gate(op: str, args: list[str]) -> tuple[Gate, tuple[int, ...]]:
    def need(k):
        if len(args) != k:
            raise ParseError(f"{op} takes {k} argument(s), got {len(args)}")

    if op in _SIMPLE_1Q:
        need(1)
        return Gate(op), (int(args[0]),)
    if op in ("J", "ZROT"):
        need(2)
        return Gate(op, float(args[1])), (int(args[0]),)
    if op in ("CZ", "CZV"):
        need(2)
        return Gate(op), (int(args[0]), int(args[1]))
    if op == "U1":
        need(9)
        vals = [float(v) for v in args[1:]]
        m = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
        return Gate.from_matrix(m.reshape(2, 2)), (int(args[0]),)
    raise ParseError(f"unknown gate {op!r}")


def format_circuit(circuit: Circuit) -> str:
    lines = [f"qubits {circuit.num_qubits}"]
    for gate, targets in circuit.gates:
        qs = " ".join(map(str, targets))
        if gate.kind in ("J", "ZROT"):
            lines.append(f"{gate.kind} {qs} {float(gate.theta)!r}")
        elif gate.kind == "U1":
            flat = np.array(gate.unitary).reshape(-1)
            nums = " ".join(f"{float(v.real)!r} {float(v.imag)!r}" for v in flat)
            lines.append(f"U1 {qs} {nums}")
        else:
            lines.append(f"{gate.kind} {qs}")
    return "\n".join(lines) + "\n"


def circuit_from_ops(num_qubits: int, ops: Iterable[tuple]) -> Circuit:
    """Build a circuit from ``(kind, targets)`` or ``(kind, targets, theta)`` tuples."""
    c = Circuit(num_qubits)
    for op in ops:
        kind, targets, *rest = op
        c.append(Gate(kind, *rest), targets if isinstance(targets, tuple) else (targets,))
    return c
