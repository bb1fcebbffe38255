"""Exact graph-state preparation with the observables ``Y`` and ``Z (x) X`` only.

Physical qubits ``1..n`` start as the vertex qubits and ``n + 1`` is the
single ancilla. The preparation runs in three steps:

1. For ``k = 1..n``: an even-degree vertex gets a ``J(0) = H`` simulation
   with input qubit ``k + 1`` (still ``|0>``) and output on qubit ``k``; its
   ``Z (x) X`` outcome is ``t_k`` and the qubit holds ``Z^{(1-t_k)/2} H|0>``.
   An odd-degree vertex is Y-measured; the outcome ``u_k`` leaves
   ``|+_{pi/2}>`` (``u_k = 1``) or ``|-_{pi/2}>``.
2. For every edge, in lexicographic order: ``(P^-1 (x) P^-1) CZ`` as
   ``H``-simulation on the second vertex, the CZ-variant simulation, and
   another ``H``-simulation, each followed by byproduct correction. The
   ``H`` steps move the second vertex to the free qubit, so the vertex to
   physical map changes as we go.
3. ``sigma_z`` on every vertex for which :func:`needs_sigma_z` holds.

Afterwards the vertex qubits hold ``|G>`` up to a global phase and the free
qubit is in a product state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InputError, NonTerminationError, ParseError, ResourceError
from .measurement import Y, ObservableSet, outcome_source
from .protocols import (
    DEFAULT_MAX_ROUNDS,
    Transcript,
    TranscriptEntry,
    apply_pauli,
    correct_byproduct,
    sim_cz_variant,
    sim_J,
)
from .qstate import Gate, StateVector, apply_gate, fidelity, split_product, zero_state

MAX_ORACLE_QUBITS = 20

_H = Gate("H")
_CZ = Gate("CZ")


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``1..n``; edges stored as sorted ``(lo, hi)`` pairs."""

    n: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise InputError("a graph needs at least one vertex")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise InputError(f"loop at vertex {u}")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise InputError(f"edge ({u}, {v}) leaves the vertex range 1..{self.n}")
            e = (min(u, v), max(u, v))
            if e in seen:
                raise InputError(f"duplicate edge {e}")
            seen.add(e)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, k: int) -> int:
        return sum(k in e for e in self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * (self.n + 1)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg[1:]

    def is_connected(self) -> bool:
        adj = {k: set() for k in range(1, self.n + 1)}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        seen, todo = {1}, [1]
        while todo:
            for w in adj[todo.pop()] - seen:
                seen.add(w)
                todo.append(w)
        return len(seen) == self.n


def parse_graph(text: str) -> Graph:
    """Parse ``n m`` followed by ``m`` lines ``u v`` (1-based); ``#`` starts a comment."""
    header = None
    edges: list[tuple[int, int]] = []
    seen: dict[tuple[int, int], int] = {}
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        last_line = lineno
        tok = line.split()
        if len(tok) != 2:
            raise ParseError(f"expected two integers, got {line!r}", lineno)
        try:
            a, b = int(tok[0]), int(tok[1])
        except ValueError:
            raise ParseError(f"expected two integers, got {line!r}", lineno) from None
        if header is None:
            if a < 1 or b < 0:
                raise ParseError("header needs n >= 1 and m >= 0", lineno)
            header = (a, b)
            continue
        n = header[0]
        if a == b:
            raise ParseError(f"loop at vertex {a}", lineno)
        if not (1 <= a <= n and 1 <= b <= n):
            raise ParseError(f"vertex out of range 1..{n}", lineno)
        e = (min(a, b), max(a, b))
        if e in seen:
            raise ParseError(f"duplicate edge {e} (first on line {seen[e]})", lineno)
        seen[e] = lineno
        edges.append(e)
    if header is None:
        raise ParseError("empty graph file", 1)
    if len(edges) != header[1]:
        raise ParseError(f"header declares {header[1]} edges, found {len(edges)}", last_line)
    return Graph(header[0], tuple(edges))


def format_graph(g: Graph) -> str:
    return "\n".join([f"{g.n} {g.m}"] + [f"{u} {v}" for u, v in g.edges]) + "\n"


def standard_graph_state(g: Graph) -> StateVector:
    """``prod CZ_e  prod H_k |0...0>``, gate by gate."""
    if g.n > MAX_ORACLE_QUBITS:
        raise ResourceError(f"{g.n} vertices exceed the oracle limit of {MAX_ORACLE_QUBITS}")
    state = zero_state(g.n)
    for k in range(1, g.n + 1):
        state = apply_gate(state, _H, (k,))
    for u, v in g.edges:
        state = apply_gate(state, _CZ, (u, v))
    return state


def needs_sigma_z(deg: int, outcome: int) -> bool:
    """Whether Step 3 applies sigma_z to a vertex of degree ``deg``.

    ``outcome`` is ``t_k`` for even degree and ``u_k`` for odd degree.
    """
    if deg < 0 or outcome not in (1, -1):
        raise InputError("need deg >= 0 and outcome in {+1, -1}")
    return outcome == (-1 if deg % 4 in (0, 1) else 1)


class VertexTag(NamedTuple):
    kind: str  # "t" (even degree, Z(x)X outcome) or "u" (odd degree, Y outcome)
    value: int


@dataclass
class GraphPrepTranscript:
    tags: dict[int, VertexTag] = field(default_factory=dict)
    step1: Transcript = field(default_factory=Transcript)
    edges: dict[tuple[int, int], Transcript] = field(default_factory=dict)
    corrections: dict[int, bool] = field(default_factory=dict)
    step3: Transcript = field(default_factory=Transcript)
    correction_rounds: int = 0

    @property
    def measurements(self) -> Transcript:
        full = Transcript()
        full.extend(self.step1)
        for t in self.edges.values():
            full.extend(t)
        full.extend(self.step3)
        return full


class Metrics(NamedTuple):
    size: int
    depth: int
    expected_size: float


def program_metrics(transcript: Transcript) -> tuple[int, int]:
    """``(size, depth)``: measurement count and ASAP layer count.

    A measurement goes one layer after the latest earlier measurement that
    shares a qubit with it, so every layer holds measurements on disjoint
    qubits and respects program order on each qubit.
    """
    last: dict[int, int] = {}
    depth = 0
    for entry in transcript:
        layer = 1 + max((last.get(q, 0) for q in entry.targets), default=0)
        for q in entry.targets:
            last[q] = layer
        depth = max(depth, layer)
    return len(transcript), depth


def expected_size(g: Graph) -> float:
    """Mean measurement count of :func:`prepare_graph_state`.

    Step 1 costs 3 per even-degree vertex and 1 per odd one. Each edge costs
    10 simulation measurements plus six byproduct Paulis (a Z and an X for
    each of its three simulation steps); each fires with probability 1/2
    and then takes on average 2 rounds of 3 measurements. Step 3 fires with
    probability 1/2 per vertex, again at 6 measurements on average.
    """
    step1 = sum(3 if d % 2 == 0 else 1 for d in g.degrees())
    per_edge = 10.0 + 6 * 0.5 * 6
    return step1 + g.m * per_edge + g.n * 0.5 * 6


@dataclass
class GraphPrepResult:
    state: StateVector
    mapping: tuple[int, ...]  # vertex k lives on physical mapping[k-1]
    transcript: GraphPrepTranscript
    metrics: Metrics

    def vertex_state(self, tol: float = 1e-9) -> StateVector:
        kept, _ = split_product(self.state, self.mapping, tol)
        return kept

    def audit(self, mode: ObservableSet = ObservableSet.S3) -> int:
        """Number of measurements outside ``mode``."""
        return sum(not mode.admits(e.observable) for e in self.transcript.measurements)


def _step1(g: Graph, state: StateVector, source, rec: GraphPrepTranscript) -> StateVector:
    # qubit k+1 is still |0> when vertex k is handled
    deg = g.degrees()
    for k in range(1, g.n + 1):
        if deg[k - 1] % 2 == 0:
            state, _, t = sim_J(state, 0.0, k + 1, k, source=source)
            rec.step1.extend(t)
            rec.tags[k] = VertexTag("t", t.entries[1].outcome)
        else:
            value, p, state = source(state, Y, (k,))
            rec.step1.append(TranscriptEntry(Y, (k,), value, p))
            rec.tags[k] = VertexTag("u", value)
    return state


def prepare_step1(g: Graph, rng: np.random.Generator | None = None, forced=None):
    """Run only the first step on ``|0...0>`` (n + 1 qubits).

    Returns ``(state, transcript)``. Vertex ``k`` then sits on qubit ``k`` in
    ``H|0>`` or ``sigma_z H|0>`` (even degree, by ``t_k``) or in ``|+i>`` or
    ``|-i>`` (odd degree, by ``u_k``), uncorrected.
    """
    rec = GraphPrepTranscript()
    state = _step1(g, zero_state(g.n + 1), outcome_source(rng, forced), rec)
    return state, rec


def prepare_graph_state(
    g: Graph,
    rng: np.random.Generator | None = None,
    forced=None,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> GraphPrepResult:
    """Prepare ``|G>`` on ``n + 1`` physical qubits using only ``Y`` and ``Z (x) X``.

    Pass a seeded ``rng`` to sample outcomes, or ``forced`` to replay a fixed
    outcome sequence (one +1/-1 per measurement, corrections included).

    Raises
    ------
    NonTerminationError
        A correction needed more than ``max_rounds`` rounds; the partial
        measurement record is attached.
    """
    if g.n + 1 > MAX_ORACLE_QUBITS + 1:
        raise ResourceError(f"{g.n} vertices exceed the simulation limit of {MAX_ORACLE_QUBITS}")
    source = outcome_source(rng, forced)
    n = g.n
    deg = g.degrees()
    state = zero_state(n + 1)
    rec = GraphPrepTranscript()
    mapping = list(range(1, n + 1))

    def free() -> int:
        used = set(mapping)
        return next(p for p in range(1, n + 2) if p not in used)

    def correct(state, byproduct, sink: Transcript):
        try:
            state, rounds, t = correct_byproduct(
                state, byproduct, free(), max_rounds=max_rounds, source=source
            )
        except NonTerminationError as err:
            sink.extend(err.transcript)
            raise NonTerminationError(str(err), rec) from None
        sink.extend(t)
        rec.correction_rounds += rounds
        return state

    state = _step1(g, state, source, rec)

    # Step 2: (P^-1 (x) P^-1) CZ per edge
    for u, v in g.edges:
        sink = Transcript()
        rec.edges[(u, v)] = sink
        for stage in ("h", "cz", "h"):
            if stage == "cz":
                state, bp, t = sim_cz_variant(state, mapping[u - 1], mapping[v - 1], free(), source=source)
                sink.extend(t)
            else:
                anc = free()
                state, bp, t = sim_J(state, 0.0, mapping[v - 1], anc, source=source)
                sink.extend(t)
                mapping[v - 1] = anc
            state = correct(state, bp, sink)

    # Step 3
    for k in range(1, n + 1):
        fire = needs_sigma_z(deg[k - 1], rec.tags[k].value)
        rec.corrections[k] = fire
        if fire:
            try:
                state, rounds, t = apply_pauli(
                    state, "Z", mapping[k - 1], free(), max_rounds=max_rounds, source=source
                )
            except NonTerminationError as err:
                rec.step3.extend(err.transcript)
                raise NonTerminationError(str(err), rec) from None
            rec.step3.extend(t)
            rec.correction_rounds += rounds

    size, depth = program_metrics(rec.measurements)
    return GraphPrepResult(state, tuple(mapping), rec, Metrics(size, depth, expected_size(g)))


def verify_graph_state(result: GraphPrepResult, g: Graph) -> float:
    """Fidelity of the prepared vertex register with the standard-procedure state."""
    return fidelity(result.vertex_state(), standard_graph_state(g))


def random_graph(n: int, p: float, rng: np.random.Generator, connected: bool = False) -> Graph:
    """Erdos-Renyi graph; with ``connected=True`` resample until connected."""
    while True:
        edges = tuple(
            (i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1) if rng.random() < p
        )
        g = Graph(n, edges)
        if not connected or g.is_connected():
            return g
