"""Adaptive measurement programs: representation, text format and execution.

A program acts on ``n`` logical qubits stored in ``n + 1`` physical qubits.
At any moment exactly one physical qubit is free; it serves as the ancilla
for the next correction. Steps:

``Measure``
    Measure an observable on physical targets. Measure steps are numbered
    ``m1, m2, ...`` in program order; corrections refer to them by number.
``Correction``
    Apply a Pauli to a *logical* qubit by repeat-until-success rounds, using
    the free physical qubit. An optional parity condition ``(c, refs)``
    makes it fire only when ``c XOR b[m_r1] XOR ...`` equals 1, where
    ``b = (1 - s) / 2`` is the bit of outcome ``s``.
``Relocation``
    Classical bookkeeping: the logical qubit now lives on another physical
    qubit.

Text format, one step per line::

    physical 3
    mode S1
    M Y 3
    M ZX 1 3
    M PLANAR 0.3 1
    RELOC 1 3
    CORR Z 1 64 IF 0 2
    CORR X 1 64 IF 1 1 2 3
    CORR Y 2 64
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence, Union

import numpy as np

from .errors import InputError, LegalityError, NonTerminationError, ParseError, ResourceError
from .measurement import Observable, ObservableSet, Sampler, measure_forced, planar_angle
from .protocols import (
    DEFAULT_MAX_ROUNDS,
    Transcript,
    TranscriptEntry,
    apply_pauli,
    pauli_label,
    x_round_procedure,
    z_round_procedure,
)
from .qstate import StateVector, split_product, zero_state


@dataclass(frozen=True)
class Measure:
    observable: Observable
    targets: tuple[int, ...]


@dataclass(frozen=True)
class Correction:
    pauli: str
    logical: int
    max_rounds: int = DEFAULT_MAX_ROUNDS
    condition: tuple[int, tuple[int, ...]] | None = None

    def fires(self, outcomes: Sequence[int]) -> bool:
        if self.condition is None:
            return True
        bit, refs = self.condition
        for r in refs:
            bit ^= (1 - outcomes[r - 1]) // 2
        return bool(bit)


@dataclass(frozen=True)
class Relocation:
    logical: int
    physical: int


Step = Union[Measure, Correction, Relocation]


@dataclass
class MeasurementProgram:
    num_logical: int
    steps: list[Step] = field(default_factory=list)
    mode: ObservableSet = ObservableSet.UNRESTRICTED

    @property
    def num_physical(self) -> int:
        return self.num_logical + 1

    @property
    def measure_count(self) -> int:
        return sum(isinstance(s, Measure) for s in self.steps)

    def observables(self) -> Iterator[Observable]:
        for s in self.steps:
            if isinstance(s, Measure):
                yield s.observable

    def audit(self, mode: ObservableSet | None = None) -> list[tuple[int, Measure]]:
        """Measure steps (with 1-based step index) whose observable ``mode`` rejects.

        Only the explicit Measure steps are audited; correction rounds always
        use ``Y`` and ``Z (x) X``, which every set admits.
        """
        mode = self.mode if mode is None else mode
        return [
            (i, s)
            for i, s in enumerate(self.steps, start=1)
            if isinstance(s, Measure) and not mode.admits(s.observable)
        ]

    def validate(self) -> None:
        """Check targets, references, relocations and the mode.

        Raises InputError (or LegalityError for a mode violation) whose
        ``step`` attribute is the 1-based index of the offending step.
        """
        n_phys = self.num_physical
        mapping = list(range(1, self.num_logical + 1))
        m_count = 0
        for i, s in enumerate(self.steps, start=1):
            if isinstance(s, Measure):
                if len(s.targets) != s.observable.arity or len(set(s.targets)) != len(s.targets):
                    raise _at_step(InputError(f"step {i}: bad targets {s.targets}"), i)
                if any(not 1 <= t <= n_phys for t in s.targets):
                    raise _at_step(InputError(f"step {i}: target out of range 1..{n_phys}"), i)
                if not self.mode.admits(s.observable):
                    raise _at_step(LegalityError(f"step {i}: {s.observable} is not in {self.mode.value}"), i)
                m_count += 1
            elif isinstance(s, Correction):
                if s.pauli not in ("X", "Y", "Z"):
                    raise _at_step(InputError(f"step {i}: unknown Pauli {s.pauli!r}"), i)
                if not 1 <= s.logical <= self.num_logical:
                    raise _at_step(InputError(f"step {i}: logical qubit {s.logical} out of range"), i)
                if s.max_rounds < 1:
                    raise _at_step(InputError(f"step {i}: max_rounds must be positive"), i)
                if s.condition is not None:
                    bit, refs = s.condition
                    if bit not in (0, 1) or any(not 1 <= r <= m_count for r in refs):
                        raise _at_step(InputError(f"step {i}: condition refers to a later measurement"), i)
            elif isinstance(s, Relocation):
                if not 1 <= s.logical <= self.num_logical or not 1 <= s.physical <= n_phys:
                    raise _at_step(InputError(f"step {i}: relocation out of range"), i)
                others = [p for j, p in enumerate(mapping) if j != s.logical - 1]
                if s.physical in others:
                    raise _at_step(InputError(f"step {i}: physical qubit {s.physical} is occupied"), i)
                mapping[s.logical - 1] = s.physical


def _at_step(err: Exception, step: int) -> Exception:
    err.step = step
    return err


# Text format -------------------------------------------------------------------


def _format_observable(obs: Observable) -> str:
    if obs.factors == ("Z", "X"):
        return "ZX"
    if obs.factors == ("Y",):
        return "Y"
    if obs.arity == 1 and planar_angle(obs.factors[0]) is not None:
        return f"PLANAR {planar_angle(obs.factors[0])!r}"
    raise InputError(f"observable {obs} has no program-file spelling")


def format_program(program: MeasurementProgram) -> str:
    lines = [f"physical {program.num_physical}", f"mode {program.mode.value}"]
    for s in program.steps:
        if isinstance(s, Measure):
            lines.append(f"M {_format_observable(s.observable)} {' '.join(map(str, s.targets))}")
        elif isinstance(s, Correction):
            line = f"CORR {s.pauli} {s.logical} {s.max_rounds}"
            if s.condition is not None:
                bit, refs = s.condition
                line += f" IF {bit} " + " ".join(map(str, refs))
            lines.append(line.rstrip())
        else:
            lines.append(f"RELOC {s.logical} {s.physical}")
    return "\n".join(lines) + "\n"


def parse_program(text: str) -> MeasurementProgram:
    header: dict[str, str] = {}
    steps: list[Step] = []
    step_lines: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        op = tok[0].upper()
        try:
            if op in ("PHYSICAL", "MODE"):
                if steps or len(tok) != 2:
                    raise ParseError(f"misplaced or malformed {op.lower()} header")
                header[op] = tok[1]
            elif op == "M":
                kind = tok[1].upper()
                if kind == "Y":
                    obs, rest = Observable(("Y",)), tok[2:]
                elif kind == "ZX":
                    obs, rest = Observable(("Z", "X")), tok[2:]
                elif kind == "PLANAR":
                    obs, rest = Observable.planar(float(tok[2])), tok[3:]
                else:
                    raise ParseError(f"unknown observable {tok[1]!r}")
                steps.append(Measure(obs, tuple(int(t) for t in rest)))
            elif op == "CORR":
                cond = None
                if len(tok) > 4:
                    if tok[4].upper() != "IF" or len(tok) < 6:
                        raise ParseError("expected 'IF <bit> <refs...>'")
                    cond = (int(tok[5]), tuple(int(r) for r in tok[6:]))
                elif len(tok) != 4:
                    raise ParseError("expected 'CORR <pauli> <logical> <max_rounds>'")
                steps.append(Correction(tok[1].upper(), int(tok[2]), int(tok[3]), cond))
            elif op == "RELOC":
                if len(tok) != 3:
                    raise ParseError("expected 'RELOC <logical> <physical>'")
                steps.append(Relocation(int(tok[1]), int(tok[2])))
            else:
                raise ParseError(f"unknown step {tok[0]!r}")
            if len(steps) > len(step_lines):
                step_lines.append(lineno)
        except ParseError as err:
            raise ParseError(str(err), lineno) from None
        except (ValueError, IndexError, InputError) as err:
            raise ParseError(f"malformed line: {err}", lineno) from None
    if "PHYSICAL" not in header:
        raise ParseError("missing 'physical N' header", 1)
    try:
        mode = ObservableSet.from_name(header.get("MODE", "UNRESTRICTED"))
        program = MeasurementProgram(int(header["PHYSICAL"]) - 1, steps, mode)
        if program.num_logical < 1:
            raise InputError("a program needs at least two physical qubits")
    except (ValueError, InputError) as err:
        raise ParseError(str(err), 1) from None
    try:
        program.validate()
    except (InputError, LegalityError) as err:
        line = step_lines[err.step - 1] if getattr(err, "step", None) else None
        if isinstance(err, LegalityError):
            raise LegalityError(f"line {line}: {err}") from None
        raise ParseError(str(err), line) from None
    return program


# Execution ---------------------------------------------------------------------


class ByproductEvent(NamedTuple):
    """Outcome of one group of conditional corrections (one simulation step)."""

    signature: str  # e.g. "Z@1 X@1"
    label: str  # e.g. "ZX" or "Z⊗I"


@dataclass
class ExecutionResult:
    state: StateVector
    mapping: tuple[int, ...]  # logical i+1 lives on physical mapping[i]
    transcript: Transcript
    byproducts: list[ByproductEvent]
    correction_rounds: int

    def logical_state(self, tol: float = 1e-9) -> StateVector:
        """The logical register in logical order; the free qubit must be unentangled."""
        kept, _ = split_product(self.state, self.mapping, tol)
        return kept


class ExecutionError(NonTerminationError):
    """Execution stopped early; carries the partial transcript and state."""

    def __init__(self, message, transcript, state, mapping):
        super().__init__(message, transcript)
        self.state = state
        self.mapping = mapping


def _free_qubit(mapping: Sequence[int], num_physical: int) -> int:
    used = set(mapping)
    for p in range(1, num_physical + 1):
        if p not in used:
            return p
    raise InputError("no free physical qubit")


def _group_label(group: list[tuple[Correction, bool]]) -> ByproductEvent:
    order: dict[int, list[int]] = {}
    sig = []
    for corr, fired in group:
        zx = order.setdefault(corr.logical, [0, 0])
        sig.append(f"{corr.pauli}@{corr.logical}")
        if fired:
            if corr.pauli in ("Z", "Y"):
                zx[0] ^= 1
            if corr.pauli in ("X", "Y"):
                zx[1] ^= 1
    return ByproductEvent(" ".join(sig), "⊗".join(pauli_label(z, x) for z, x in order.values()))


def execute(
    program: MeasurementProgram,
    input_state: StateVector,
    rng: np.random.Generator,
    max_rounds: int | None = None,
) -> ExecutionResult:
    """Run ``program`` on ``input_state`` (logical qubits); the ancilla starts in |0>.

    ``max_rounds`` overrides the per-step correction budget when given.

    Raises
    ------
    ExecutionError
        A correction exhausted its rounds. The error carries the transcript
        up to that point, the current state and the logical placement.
    """
    if input_state.num_qubits != program.num_logical:
        raise InputError(
            f"input has {input_state.num_qubits} qubits, program expects {program.num_logical}"
        )
    program.validate()
    state = input_state.tensor(zero_state(1))
    mapping = list(range(1, program.num_logical + 1))
    source = Sampler(rng)
    transcript = Transcript()
    outcomes: list[int] = []
    byproducts: list[ByproductEvent] = []
    group: list[tuple[Correction, bool]] = []
    rounds_total = 0

    def close_group():
        if group:
            byproducts.append(_group_label(group))
            group.clear()

    for step in program.steps:
        if isinstance(step, Measure):
            close_group()
            value, p, state = source(state, step.observable, step.targets)
            outcomes.append(value)
            transcript.append(TranscriptEntry(step.observable, step.targets, value, p))
        elif isinstance(step, Relocation):
            mapping[step.logical - 1] = step.physical
        else:
            fired = step.fires(outcomes)
            if step.condition is not None:
                group.append((step, fired))
            else:
                close_group()
            if not fired:
                continue
            anc = _free_qubit(mapping, program.num_physical)
            budget = step.max_rounds if max_rounds is None else max_rounds
            try:
                state, rounds, t = apply_pauli(
                    state, step.pauli, mapping[step.logical - 1], anc, max_rounds=budget, source=source
                )
            except NonTerminationError as err:
                transcript.extend(err.transcript)
                raise ExecutionError(str(err), transcript, state, tuple(mapping)) from None
            transcript.extend(t)
            rounds_total += rounds
    close_group()
    return ExecutionResult(state, tuple(mapping), transcript, byproducts, rounds_total)


# Exhaustive enumeration ------------------------------------------------------------


class ProgramBranch(NamedTuple):
    probability: float
    state: StateVector
    mapping: tuple[int, ...]


@dataclass
class ProgramEnumeration:
    branches: list[ProgramBranch]
    dropped_probability: float  # mass of branches where a correction ran out of rounds

    @property
    def kept_probability(self) -> float:
        return sum(b.probability for b in self.branches)


def _phase_key(amps: np.ndarray) -> bytes:
    i = int(np.argmax(np.abs(amps) > 1e-6))
    a = amps * (abs(amps[i]) / amps[i])
    return np.round(a, 8).tobytes()


def enumerate_program(
    program: MeasurementProgram,
    input_state: StateVector,
    max_rounds: int = 3,
    branch_limit: int = 200_000,
) -> ProgramEnumeration:
    """Follow every outcome of every measurement of ``program``.

    Correction loops are cut off after ``max_rounds`` attempts per Pauli;
    the probability lost that way is reported as ``dropped_probability`` and
    the surviving branches are the ones conditioned on success. Branches
    whose states agree up to global phase and whose still-relevant outcomes
    agree are merged, which keeps the frontier small without losing any
    distinct final state.
    """
    program.validate()
    # last Measure ordinal each outcome is still needed for
    last_use: dict[int, int] = {}
    m = 0
    for s in program.steps:
        if isinstance(s, Measure):
            m += 1
        elif isinstance(s, Correction) and s.condition is not None:
            for r in s.condition[1]:
                last_use[r] = m

    # frontier entry: (prob, state, mapping, outcomes tuple)
    frontier = [(1.0, input_state.tensor(zero_state(1)), tuple(range(1, program.num_logical + 1)), ())]
    dropped = 0.0
    m = 0
    for step in program.steps:
        nxt = []
        if isinstance(step, Measure):
            m += 1
            for prob, st, mp, outs in frontier:
                for v in (1, -1):
                    p, post = measure_forced(st, step.observable, step.targets, v)
                    if post is not None:
                        nxt.append((prob * p, post, mp, outs + (v,)))
        elif isinstance(step, Relocation):
            for prob, st, mp, outs in frontier:
                mp = list(mp)
                mp[step.logical - 1] = step.physical
                nxt.append((prob, st, tuple(mp), outs))
        else:
            for prob, st, mp, outs in frontier:
                if not step.fires(outs):
                    nxt.append((prob, st, mp, outs))
                    continue
                anc = _free_qubit(mp, program.num_physical)
                q = mp[step.logical - 1]
                parts = ("Z", "X") if step.pauli == "Y" else (step.pauli,)
                current = [(prob, st)]
                for part in parts:
                    current, lost = _enumerate_rounds(current, part, q, anc, max_rounds)
                    dropped += lost
                nxt.extend((p, s, mp, outs) for p, s in current)
        frontier = _merge(nxt, {r for r, last in last_use.items() if last > m})
        if len(frontier) > branch_limit:
            raise ResourceError(f"more than {branch_limit} distinct branches")
    return ProgramEnumeration(
        [ProgramBranch(p, s, mp) for p, s, mp, _ in frontier], dropped
    )


def _enumerate_rounds(current, pauli, q, anc, max_rounds):
    proc = (x_round_procedure if pauli == "X" else z_round_procedure)(q, anc)
    done: list[tuple[float, StateVector]] = []
    pending = current
    for _ in range(max_rounds):
        failed = []
        for prob, st in pending:
            _walk_round(proc, st, prob, done, failed)
        pending = _merge_states(failed)
    lost = sum(p for p, _ in pending)
    return _merge_states(done), lost


def _walk_round(proc, st, prob, done, failed):
    def walk(state, i, outs, p):
        if i == len(proc.instructions):
            (done if not proc.byproduct(outs).is_identity else failed).append((p, state))
            return
        obs, targets = proc.instructions[i]
        for v in (1, -1):
            pv, post = measure_forced(state, obs, targets, v)
            if post is not None:
                walk(post, i + 1, outs + (v,), p * pv)

    walk(st, 0, (), prob)


def _merge_states(items):
    merged: dict[bytes, list] = {}
    for p, st in items:
        key = _phase_key(st.amplitudes)
        if key in merged:
            merged[key][0] += p
        else:
            merged[key] = [p, st]
    return [(p, st) for p, st in merged.values()]


def _merge(items, live_refs):
    merged: dict[tuple, list] = {}
    for prob, st, mp, outs in items:
        live = tuple(v for i, v in enumerate(outs, start=1) if i in live_refs)
        key = (_phase_key(st.amplitudes), mp, live)
        if key in merged:
            merged[key][0] += prob
        else:
            merged[key] = [prob, st, mp, outs]
    return [tuple(v) for v in merged.values()]
