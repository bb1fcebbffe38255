"""Gate simulation and Pauli correction by measurements alone.

Every procedure here is a fixed list of measurements followed by a rule that
maps the outcomes ``s1, s2, ...`` (each +1 or -1) to the Pauli byproduct left
on the data. A byproduct ``(z, x)`` on a qubit means the data now holds
``Z^z X^x U|phi>`` up to a global phase.

=================  ==========================================  ==============================
procedure          measurements (qubit labels as passed in)    byproduct
=================  ==========================================  ==============================
state transfer     -Y(anc), Z(x)Z(src,anc), Y(src)              anc: x=(1-s2)/2, z=(1+s1s2s3)/2
J(theta)           Y(anc), Z(x)X(in,anc), Planar(pi/2-th)(in)   anc: z=(1-s2)/2, x=(1+s1s2s3)/2
CZ variant         Y(a), Z(x)X(q1,a), Z(x)X(a,q2), Y(a)         q1: z=(1-s1s2s3)/2, q2: x=(1-s2s3s4)/2
X round            Y(anc), Z(x)X(anc,q), Y(anc)                 q: x=(1-s1s3)/2
Z round            Y(anc), Z(x)X(q,anc), Y(anc)                 q: z=(1-s1s3)/2
=================  ==========================================  ==============================

The J(theta) procedure moves the logical qubit from ``input`` onto ``anc``;
all others leave the data where it was. Each procedure starts with a
Y-type measurement of the ancilla, so the ancilla may be in any state that
is not entangled with the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import InputError, NonTerminationError
from .measurement import (
    MINUS_Y,
    Y,
    ZX,
    Branch,
    Observable,
    enumerate_branches,
    outcome_source,
)
from .qstate import (
    PAULI_X,
    PAULI_Z,
    StateVector,
    apply_matrix_raw,
    check_targets,
)

ZZ = Observable(("Z", "Z"))
DEFAULT_MAX_ROUNDS = 64

Instruction = tuple[Observable, tuple[int, ...]]


def _bit(product: int) -> int:
    """``(1 - product) / 2`` for ``product`` in {+1, -1}."""
    return (1 - product) // 2


@dataclass(frozen=True)
class ByproductRecord:
    """Pauli side effect ``Z^z X^x`` per qubit, plus the outcomes that fixed it."""

    paulis: tuple[tuple[int, int, int], ...]  # (qubit, z, x)
    outcomes: tuple[int, ...] = ()

    @property
    def is_identity(self) -> bool:
        return all(z == 0 and x == 0 for _, z, x in self.paulis)

    def on(self, qubit: int) -> tuple[int, int]:
        for q, z, x in self.paulis:
            if q == qubit:
                return z, x
        return 0, 0

    @property
    def label(self) -> str:
        """Class name such as ``"ZX"`` or ``"Z⊗X"`` (``ZX`` is sigma_z sigma_x, i.e. sigma_y up to phase)."""
        return "⊗".join(pauli_label(z, x) for _, z, x in self.paulis)

    def apply(self, state: StateVector) -> StateVector:
        """Return ``Z^z X^x |state>`` on every listed qubit."""
        amps = state.amplitudes
        for q, z, x in self.paulis:
            (axis,) = check_targets(state.num_qubits, (q,), 1)
            if x:
                amps = apply_matrix_raw(amps, PAULI_X, (axis,))
            if z:
                amps = apply_matrix_raw(amps, PAULI_Z, (axis,))
        return StateVector(amps)


def pauli_label(z: int, x: int) -> str:
    return {(0, 0): "I", (0, 1): "X", (1, 0): "Z", (1, 1): "ZX"}[(z, x)]


class TranscriptEntry(NamedTuple):
    observable: Observable
    targets: tuple[int, ...]
    outcome: int
    probability: float


@dataclass
class Transcript:
    """Ordered classical record of every measurement performed."""

    entries: list[TranscriptEntry] = field(default_factory=list)

    def append(self, entry: TranscriptEntry) -> None:
        self.entries.append(entry)

    def extend(self, other: "Transcript") -> None:
        self.entries.extend(other.entries)

    @property
    def outcomes(self) -> tuple[int, ...]:
        return tuple(e.outcome for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[TranscriptEntry]:
        return iter(self.entries)


class ParityRule(NamedTuple):
    """Pauli ``pauli`` on ``qubit`` fires iff ``const XOR b[r1] XOR b[r2] ...`` is 1.

    ``b[i] = (1 - s_i) / 2`` is the bit of the i-th outcome (1-based refs).
    """

    qubit: int
    pauli: str  # "Z" or "X"
    const: int
    refs: tuple[int, ...]

    def fires(self, outcomes: Sequence[int]) -> bool:
        bit = self.const
        for r in self.refs:
            bit ^= _bit(outcomes[r - 1])
        return bool(bit)


@dataclass(frozen=True)
class Procedure:
    """A fixed measurement list plus the parity rules giving its byproduct."""

    name: str
    instructions: tuple[Instruction, ...]
    rules: tuple[ParityRule, ...]

    def byproduct(self, outcomes: Sequence[int]) -> ByproductRecord:
        outcomes = tuple(outcomes)
        exps: dict[int, list[int]] = {}
        for rule in self.rules:
            zx = exps.setdefault(rule.qubit, [0, 0])
            if rule.fires(outcomes):
                zx[0 if rule.pauli == "Z" else 1] ^= 1
        return ByproductRecord(tuple((q, z, x) for q, (z, x) in exps.items()), outcomes)

    @property
    def size(self) -> int:
        return len(self.instructions)


def _distinct(*qubits: int) -> None:
    if len(set(qubits)) != len(qubits):
        raise InputError(f"qubits must be distinct, got {qubits}")
    for q in qubits:
        if int(q) < 1:
            raise InputError(f"qubit labels start at 1, got {q}")


def transfer_procedure(src: int, anc: int) -> Procedure:
    _distinct(src, anc)
    return Procedure(
        "transfer",
        ((MINUS_Y, (anc,)), (ZZ, (src, anc)), (Y, (src,))),
        (ParityRule(anc, "Z", 1, (1, 2, 3)), ParityRule(anc, "X", 0, (2,))),
    )


def j_procedure(theta: float, input: int, anc: int) -> Procedure:
    _distinct(input, anc)
    return Procedure(
        "J",
        ((Y, (anc,)), (ZX, (input, anc)), (Observable.planar(math.pi / 2 - theta), (input,))),
        (ParityRule(anc, "Z", 0, (2,)), ParityRule(anc, "X", 1, (1, 2, 3))),
    )


def cz_variant_procedure(q1: int, q2: int, anc: int) -> Procedure:
    _distinct(q1, q2, anc)
    return Procedure(
        "CZV",
        ((Y, (anc,)), (ZX, (q1, anc)), (ZX, (anc, q2)), (Y, (anc,))),
        (ParityRule(q1, "Z", 0, (1, 2, 3)), ParityRule(q2, "X", 0, (2, 3, 4))),
    )


def x_round_procedure(q: int, anc: int) -> Procedure:
    _distinct(q, anc)
    # X on q and Z on anc is the Z(x)X observable applied to (anc, q)
    return Procedure(
        "corrX",
        ((Y, (anc,)), (ZX, (anc, q)), (Y, (anc,))),
        (ParityRule(q, "X", 0, (1, 3)),),
    )


def z_round_procedure(q: int, anc: int) -> Procedure:
    _distinct(q, anc)
    return Procedure(
        "corrZ",
        ((Y, (anc,)), (ZX, (q, anc)), (Y, (anc,))),
        (ParityRule(q, "Z", 0, (1, 3)),),
    )


# Running -------------------------------------------------------------------


class StepResult(NamedTuple):
    state: StateVector
    byproduct: ByproductRecord
    transcript: Transcript


def _source(rng, forced, source):
    if source is not None:
        if rng is not None or forced is not None:
            raise InputError("pass only one of rng, forced or source")
        return source
    return outcome_source(rng, forced)


def run_procedure(
    state: StateVector,
    procedure: Procedure,
    rng: np.random.Generator | None = None,
    forced: Sequence[int] | None = None,
    *,
    source=None,
) -> StepResult:
    """Execute ``procedure`` on ``state``.

    Outcomes come from exactly one of ``rng`` (Born sampling), ``forced`` (a
    +1/-1 sequence; an impossible outcome raises ZeroProbabilityError) or
    ``source`` (a shared :class:`~moqc.measurement.Sampler` or
    :class:`~moqc.measurement.ForcedOutcomes`).
    """
    src = _source(rng, forced, source)
    for _, targets in procedure.instructions:
        check_targets(state.num_qubits, targets, len(targets))
    transcript = Transcript()
    for obs, targets in procedure.instructions:
        value, p, state = src(state, obs, targets)
        transcript.append(TranscriptEntry(obs, targets, value, p))
    return StepResult(state, procedure.byproduct(transcript.outcomes), transcript)


def enumerate_procedure(
    state: StateVector, procedure: Procedure
) -> list[tuple[Branch, ByproductRecord]]:
    """Every nonzero-probability branch of ``procedure`` with its byproduct."""
    return [
        (b, procedure.byproduct(b.outcomes))
        for b in enumerate_branches(state, procedure.instructions)
    ]


def state_transfer(state, src, anc, rng=None, forced=None, *, source=None) -> StepResult:
    """Move the state of ``src`` onto ``anc`` up to a Pauli; ``src`` ends in a Y eigenstate."""
    return run_procedure(state, transfer_procedure(src, anc), rng, forced, source=source)


def sim_J(state, theta, input, anc, rng=None, forced=None, *, source=None) -> StepResult:
    """Implement ``sigma J(theta)`` on the logical qubit held by ``input``.

    The output lands on ``anc``; ``input`` is left in an eigenstate of
    ``Planar(pi/2 - theta)`` and becomes the free qubit.
    """
    return run_procedure(state, j_procedure(theta, input, anc), rng, forced, source=source)


def sim_cz_variant(state, q1, q2, anc, rng=None, forced=None, *, source=None) -> StepResult:
    """Implement ``sigma (P^-1 (x) H P^-1) CZ (I (x) H)`` on ``(q1, q2)`` in place."""
    return run_procedure(state, cz_variant_procedure(q1, q2, anc), rng, forced, source=source)


class RoundResult(NamedTuple):
    state: StateVector
    success: bool
    transcript: Transcript


def correct_x_round(state, q, anc, rng=None, forced=None, *, source=None) -> RoundResult:
    """One attempt at sigma_x on ``q``: succeeds iff ``s1 * s3 == -1``, otherwise identity."""
    res = run_procedure(state, x_round_procedure(q, anc), rng, forced, source=source)
    return RoundResult(res.state, not res.byproduct.is_identity, res.transcript)


def correct_z_round(state, q, anc, rng=None, forced=None, *, source=None) -> RoundResult:
    res = run_procedure(state, z_round_procedure(q, anc), rng, forced, source=source)
    return RoundResult(res.state, not res.byproduct.is_identity, res.transcript)


class PauliResult(NamedTuple):
    state: StateVector
    rounds_used: int
    transcript: Transcript


_ROUNDS = {"X": correct_x_round, "Z": correct_z_round}


def apply_pauli(
    state: StateVector,
    pauli: str,
    q: int,
    anc: int,
    rng: np.random.Generator | None = None,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    *,
    source=None,
) -> PauliResult:
    """Apply ``X``, ``Y`` or ``Z`` to ``q`` by repeating correction rounds until one succeeds.

    ``Y`` is a successful Z round followed by a successful X round (sigma_x
    sigma_z = -i sigma_y). ``max_rounds`` bounds the attempts for each of
    those constituents separately, so a single Pauli fails with probability
    ``2**-max_rounds``.

    Raises
    ------
    NonTerminationError
        When a constituent fails ``max_rounds`` times; ``err.transcript``
        holds every measurement made.
    """
    pauli = pauli.upper().removeprefix("SIGMA_")
    if pauli not in ("X", "Y", "Z"):
        raise InputError(f"unknown Pauli {pauli!r}")
    if max_rounds < 1:
        raise InputError("max_rounds must be positive")
    src = _source(rng, None, source)
    transcript = Transcript()
    rounds = 0
    for part in ("Z", "X") if pauli == "Y" else (pauli,):
        for _ in range(max_rounds):
            state, success, t = _ROUNDS[part](state, q, anc, source=src)
            transcript.extend(t)
            rounds += 1
            if success:
                break
        else:
            raise NonTerminationError(
                f"sigma_{part.lower()} on qubit {q} failed {max_rounds} rounds in a row",
                transcript,
            )
    return PauliResult(state, rounds, transcript)


def correct_byproduct(
    state: StateVector,
    byproduct: ByproductRecord,
    anc: int,
    rng: np.random.Generator | None = None,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    *,
    source=None,
) -> PauliResult:
    """Undo every Pauli recorded in ``byproduct`` using ``anc`` as the helper qubit."""
    src = _source(rng, None, source)
    transcript = Transcript()
    rounds = 0
    for q, z, x in byproduct.paulis:
        for pauli, needed in (("Z", z), ("X", x)):
            if not needed:
                continue
            try:
                state, r, t = apply_pauli(state, pauli, q, anc, max_rounds=max_rounds, source=src)
            except NonTerminationError as err:
                transcript.extend(err.transcript)
                raise NonTerminationError(str(err), transcript) from None
            transcript.extend(t)
            rounds += r
    return PauliResult(state, rounds, transcript)


#: The procedures on their canonical qubits: data on 1 (and 2 for simCZ), ancilla last.
PROCEDURES = {
    "transfer": lambda theta=0.0: transfer_procedure(1, 2),
    "simJ": lambda theta=0.0: j_procedure(theta, 1, 2),
    "simCZ": lambda theta=0.0: cz_variant_procedure(1, 2, 3),
    "corrX": lambda theta=0.0: x_round_procedure(1, 2),
    "corrZ": lambda theta=0.0: z_round_procedure(1, 2),
}
