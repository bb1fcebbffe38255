"""Command-line front end.

Exit codes: 0 ok, 1 parse/input error, 2 observable-set violation,
3 verification failure, 4 resource limit or non-termination.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import parse_circuit
from .compiler import compile_circuit, verify_program
from .errors import InputError, LegalityError, NonTerminationError, ResourceError
from .graphstate import (
    MAX_ORACLE_QUBITS,
    parse_graph,
    prepare_graph_state,
    standard_graph_state,
)
from .measurement import ObservableSet
from .program import execute, format_program
from .protocols import PROCEDURES, ByproductRecord, enumerate_procedure
from .qstate import (
    I2,
    StateVector,
    apply_unitary,
    cz_variant_matrix,
    fidelity,
    j_matrix,
    random_state,
    split_product,
    zero_state,
)

EXIT_OK, EXIT_PARSE, EXIT_LEGALITY, EXIT_VERIFY, EXIT_RESOURCE = 0, 1, 2, 3, 4
SEED_ENV = "MOQC_SEED"
MODE_NAMES = {"s1": ObservableSet.S1, "s2": ObservableSet.S2, "s3": ObservableSet.S3, "any": ObservableSet.UNRESTRICTED}


@dataclass(frozen=True)
class RunConfig:
    seed: int
    tolerance: float = 1e-9
    mode: ObservableSet = ObservableSet.S1
    limit: int = 20
    max_rounds: int = 64
    trials: int = 0
    output: Path | None = None
    fmt: str = "text"

    def __post_init__(self):
        if not 0 < self.tolerance < 1:
            raise InputError("tolerance must lie in (0, 1)")
        if not 1 <= self.limit <= 24:
            raise InputError("enumeration limit must lie in 1..24")
        if self.max_rounds < 1:
            raise InputError("max-rounds must be positive")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")


# Reports -------------------------------------------------------------------------


class Report:
    """Ordered key/value fields plus named tables; renders as text or JSON."""

    def __init__(self, command: str):
        self.fields: dict[str, object] = {"version": __version__, "command": command}
        self.tables: dict[str, tuple[list[str], list[list[object]]]] = {}

    def __setitem__(self, key, value):
        self.fields[key] = value

    def table(self, name: str, columns: list[str], rows: list[list[object]]):
        self.tables[name] = (columns, rows)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = dict(self.fields)
            doc["tables"] = {
                name: [dict(zip(cols, row)) for row in rows] for name, (cols, rows) in self.tables.items()
            }
            return json.dumps(doc, indent=2, default=_jsonable) + "\n"
        lines = [f"# moqc {self.fields['command']} report"]
        lines += [f"{k}: {_fmt(v)}" for k, v in self.fields.items()]
        for name, (cols, rows) in self.tables.items():
            lines.append("")
            lines.append(f"[{name}]")
            lines.append("\t".join(cols))
            lines += ["\t".join(_fmt(v) for v in row) for row in rows]
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{round(v, 12) + 0.0:.12f}"
    if isinstance(v, complex):
        return f"{round(v.real, 9) + 0.0:+.9f}{round(v.imag, 9) + 0.0:+.9f}j"
    return str(v)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return str(v)


def _phase_fixed(state: StateVector) -> np.ndarray:
    amps = state.amplitudes
    i = int(np.argmax(np.abs(amps) > 1e-9))
    return amps * (abs(amps[i]) / amps[i])


def _amplitude_rows(state: StateVector) -> list[list[object]]:
    n = state.num_qubits
    return [
        [format(i, f"0{n}b"), complex(a)]
        for i, a in enumerate(_phase_fixed(state))
        if abs(a) > 1e-12
    ]


def _transcript_rows(transcript) -> list[list[object]]:
    return [
        [i, str(e.observable), " ".join(map(str, e.targets)), f"{e.outcome:+d}", e.probability]
        for i, e in enumerate(transcript, start=1)
    ]


def _emit(report: Report, cfg: RunConfig) -> None:
    text = report.render(cfg.fmt)
    if cfg.output is not None:
        cfg.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# Commands --------------------------------------------------------------------------


def cmd_simulate(path: Path, cfg: RunConfig) -> int:
    circuit = parse_circuit(Path(path).read_text(encoding="utf-8"))
    program = compile_circuit(circuit, cfg.mode, cfg.max_rounds)
    rng = np.random.default_rng(cfg.seed)
    phi = zero_state(circuit.num_qubits)
    res = execute(program, phi, rng)
    got = res.logical_state(cfg.tolerance)
    fid = fidelity(got, circuit.simulate(phi))
    ok = fid >= 1 - cfg.tolerance

    report = Report("simulate")
    report["circuit"] = Path(path).name
    report["mode"] = cfg.mode.value
    report["seed"] = cfg.seed
    report["logical_qubits"] = circuit.num_qubits
    report["physical_qubits"] = program.num_physical
    report["gates"] = len(circuit)
    report["program_steps"] = len(program.steps)
    report["measurements"] = len(res.transcript)
    report["correction_rounds"] = res.correction_rounds
    report["placement"] = " ".join(f"{i}->{p}" for i, p in enumerate(res.mapping, start=1))
    report["audit"] = f"{cfg.mode.value}: {'pass' if not program.audit() else 'fail'}"
    report["fidelity"] = fid
    if cfg.trials:
        ver = verify_program(circuit, cfg.trials, cfg.seed, cfg.mode, cfg.max_rounds)
        report["verify_trials"] = cfg.trials
        report["verify_min_fidelity"] = ver.min_fidelity
        ok = ok and ver.passed(cfg.tolerance)
    report["status"] = "ok" if ok else "verification-failed"
    report.table("final_state", ["basis", "amplitude"], _amplitude_rows(got))
    report.table("transcript", ["n", "observable", "targets", "outcome", "probability"], _transcript_rows(res.transcript))
    _emit(report, cfg)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_compile(path: Path, cfg: RunConfig) -> int:
    circuit = parse_circuit(Path(path).read_text(encoding="utf-8"))
    text = format_program(compile_circuit(circuit, cfg.mode, cfg.max_rounds))
    if cfg.output is not None:
        cfg.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_graphstate(path: Path, cfg: RunConfig) -> int:
    g = parse_graph(Path(path).read_text(encoding="utf-8"))
    if g.n > min(cfg.limit, MAX_ORACLE_QUBITS):
        raise ResourceError(f"{g.n} vertices exceed the verification limit of {cfg.limit}")
    oracle = standard_graph_state(g)
    runs = max(cfg.trials, 1)
    results = []
    for i in range(runs):
        rng = np.random.default_rng(cfg.seed if runs == 1 else [cfg.seed, i])
        results.append(prepare_graph_state(g, rng, max_rounds=cfg.max_rounds))
    fids = [fidelity(r.vertex_state(cfg.tolerance), oracle) for r in results]
    audit_bad = sum(r.audit(ObservableSet.S3) for r in results)
    ok = min(fids) >= 1 - cfg.tolerance and audit_bad == 0
    first = results[0]
    deg = g.degrees()

    report = Report("graphstate")
    report["graph"] = Path(path).name
    report["vertices"] = g.n
    report["edges"] = g.m
    report["seed"] = cfg.seed
    report["runs"] = runs
    report["physical_qubits"] = first.state.num_qubits
    report["fidelity"] = min(fids)
    report["size"] = first.metrics.size
    report["depth"] = first.metrics.depth
    report["expected_size"] = first.metrics.expected_size
    if runs > 1:
        report["mean_size"] = float(np.mean([r.metrics.size for r in results]))
    report["correction_rounds"] = first.transcript.correction_rounds
    report["audit"] = f"S3: {'pass' if audit_bad == 0 else 'fail'}"
    report["status"] = "ok" if ok else "verification-failed"
    report.table(
        "vertices",
        ["vertex", "degree", "tag", "outcome", "sigma_z", "physical"],
        [
            [k, deg[k - 1], first.transcript.tags[k].kind, f"{first.transcript.tags[k].value:+d}",
             first.transcript.corrections[k], first.mapping[k - 1]]
            for k in range(1, g.n + 1)
        ],
    )
    _emit(report, cfg)
    return EXIT_OK if ok else EXIT_VERIFY


def _procedure_target(name: str, theta: float):
    """(data qubits, unitary, qubits that hold the output) for each named procedure."""
    return {
        "transfer": ([1], I2, [2]),
        "simJ": ([1], j_matrix(theta), [2]),
        "simCZ": ([1, 2], cz_variant_matrix(), [1, 2]),
        "corrX": ([1], I2, [1]),
        "corrZ": ([1], I2, [1]),
    }[name]


def cmd_enumerate(name: str, theta: float, cfg: RunConfig) -> int:
    if name not in PROCEDURES:
        raise InputError(f"unknown procedure {name!r}; choose from {', '.join(PROCEDURES)}")
    proc = PROCEDURES[name](theta)
    if proc.size > cfg.limit:
        raise ResourceError(f"{proc.size} measurements exceed the limit {cfg.limit}")
    data, unitary, out = _procedure_target(name, theta)
    rng = np.random.default_rng(cfg.seed)
    phi = random_state(len(data), rng)
    state = phi.tensor(zero_state(1))
    ideal = apply_unitary(phi, unitary, list(range(1, len(data) + 1)))

    rows, masses, worst = [], {}, 0.0
    for branch, bp in enumerate_procedure(state, proc):
        kept, _ = split_product(branch.state, out, cfg.tolerance)
        relabel = ByproductRecord(tuple((out.index(q) + 1, z, x) for q, z, x in bp.paulis))
        residual = max(0.0, 1.0 - fidelity(kept, relabel.apply(ideal)))
        worst = max(worst, residual)
        masses[bp.label] = masses.get(bp.label, 0.0) + branch.probability
        rows.append([" ".join(f"{s:+d}" for s in branch.outcomes), branch.probability, bp.label, residual])
    total = sum(r[1] for r in rows)
    ok = worst <= cfg.tolerance and abs(total - 1) <= cfg.tolerance

    report = Report("enumerate")
    report["procedure"] = name
    if name == "simJ":
        report["theta"] = theta
    report["seed"] = cfg.seed
    report["measurements"] = proc.size
    report["branches"] = len(rows)
    report["total_probability"] = total
    report["max_residual"] = worst
    if name in ("corrX", "corrZ"):
        report["success_probability"] = sum(p for label, p in masses.items() if label != "I")
    report["status"] = "ok" if ok else "verification-failed"
    report.table("branches", ["outcomes", "probability", "byproduct", "residual"], rows)
    report.table("byproduct_classes", ["class", "probability"], [[k, v] for k, v in sorted(masses.items())])
    _emit(report, cfg)
    return EXIT_OK if ok else EXIT_VERIFY


# Entry point -----------------------------------------------------------------------------


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    common.add_argument("--tol", type=float, default=1e-9, help="fidelity tolerance")
    common.add_argument("--mode", choices=sorted(MODE_NAMES), default="s1", help="observable set")
    common.add_argument("--trials", type=int, default=0, help="extra verification runs")
    common.add_argument("--max-rounds", type=int, default=64, help="correction rounds per Pauli")
    common.add_argument("--limit", type=int, default=20, help="enumeration/verification size limit")
    common.add_argument("--out", type=Path, default=None, help="write the report here")
    common.add_argument("--format", choices=["text", "json"], default="text", dest="fmt")

    parser = argparse.ArgumentParser(prog="moqc", description="Measurement-only quantum computation toolkit.")
    parser.add_argument("--version", action="version", version=f"moqc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="compile and execute a circuit file")
    p.add_argument("circuit", type=Path)
    p = sub.add_parser("compile", parents=[common], help="print the measurement program for a circuit")
    p.add_argument("circuit", type=Path)
    p = sub.add_parser("graphstate", parents=[common], help="prepare and verify a graph state")
    p.add_argument("graph", type=Path)
    p = sub.add_parser("enumerate", parents=[common], help="list every branch of a procedure")
    p.add_argument("procedure", choices=sorted(PROCEDURES))
    p.add_argument("--theta", type=float, default=0.0, help="angle for simJ (radians)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            seed=args.seed if args.seed is not None else _default_seed(),
            tolerance=args.tol,
            mode=MODE_NAMES[args.mode],
            limit=args.limit,
            max_rounds=args.max_rounds,
            trials=max(args.trials, 0),
            output=args.out,
            fmt=args.fmt,
        )
        if args.command == "simulate":
            return cmd_simulate(args.circuit, cfg)
        if args.command == "compile":
            return cmd_compile(args.circuit, cfg)
        if args.command == "graphstate":
            return cmd_graphstate(args.graph, cfg)
        return cmd_enumerate(args.procedure, args.theta, cfg)
    except LegalityError as err:
        print(f"moqc: legality error: {err}", file=sys.stderr)
        return EXIT_LEGALITY
    except (ResourceError, NonTerminationError) as err:
        print(f"moqc: {err}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InputError, OSError, ValueError) as err:
        print(f"moqc: {err}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
