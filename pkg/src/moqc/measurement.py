"""Projective measurements of +/-1-valued observables.

An :class:`Observable` is a tensor product of one-qubit factors, each one of
``"X"``, ``"Y"``, ``"Z"`` or a float ``theta`` standing for the planar
observable ``cos(theta) X + sin(theta) Y``. Planar factors at 0 and pi/2 are
stored as ``"X"`` and ``"Y"`` so that equal matrices have equal
representations.

Two-qubit observables act on an *ordered* pair of targets: measuring
``X (x) Z`` on qubits ``(a, b)`` is the ``Z (x) X`` observable applied to
``(b, a)``, which is how the set membership rules expect it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from .errors import InputError, ResourceError, ZeroProbabilityError
from .qstate import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    StateVector,
    apply_matrix_raw,
    check_targets,
    normalize_angle,
)

Factor = Union[str, float]

ZERO_PROBABILITY = 1e-14
DEFAULT_ENUMERATION_LIMIT = 20
_ANGLE_TOL = 1e-12


def _canonical_factor(f: Factor) -> Factor:
    if isinstance(f, str):
        if f not in ("X", "Y", "Z"):
            raise InputError(f"unknown observable factor {f!r}")
        return f
    theta = normalize_angle(f)
    if abs(theta) < _ANGLE_TOL:
        return "X"
    if abs(theta - math.pi / 2) < _ANGLE_TOL:
        return "Y"
    return theta


def _factor_matrix(f: Factor) -> np.ndarray:
    if f == "X":
        return PAULI_X
    if f == "Y":
        return PAULI_Y
    if f == "Z":
        return PAULI_Z
    return math.cos(f) * PAULI_X + math.sin(f) * PAULI_Y


def planar_angle(f: Factor) -> float | None:
    """Angle of a factor in the (X, Y) plane, or ``None`` for ``Z``."""
    if f == "X":
        return 0.0
    if f == "Y":
        return math.pi / 2
    if f == "Z":
        return None
    return float(f)


@dataclass(frozen=True)
class Observable:
    """Tensor product of one-qubit factors with eigenvalues +1 and -1."""

    factors: tuple[Factor, ...]

    def __post_init__(self):
        factors = tuple(_canonical_factor(f) for f in self.factors)
        if len(factors) not in (1, 2):
            raise InputError("observables act on one or two qubits")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def planar(cls, theta: float) -> "Observable":
        """``cos(theta) X + sin(theta) Y``."""
        return cls((float(theta),))

    @property
    def arity(self) -> int:
        return len(self.factors)

    @property
    def matrix(self) -> np.ndarray:
        return _observable_matrix(self).copy()

    def __str__(self) -> str:
        parts = []
        for f in self.factors:
            parts.append(f if isinstance(f, str) else f"Planar({f:.6g})")
        return "(x)".join(parts)


Y = Observable(("Y",))
X = Observable(("X",))
ZX = Observable(("Z", "X"))
MINUS_Y = Observable.planar(3 * math.pi / 2)


@lru_cache(maxsize=1024)
def _observable_matrix(obs: Observable) -> np.ndarray:
    m = np.ones((1, 1), dtype=complex)
    for f in obs.factors:
        m = np.kron(m, _factor_matrix(f))
    return m


@lru_cache(maxsize=1024)
def _projectors(obs: Observable) -> tuple[np.ndarray, np.ndarray]:
    m = _observable_matrix(obs)
    eye = np.eye(m.shape[0], dtype=complex)
    return (eye + m) / 2, (eye - m) / 2


def eigenprojectors(obs: Observable) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the +1 and -1 eigenspaces of ``obs``."""
    plus, minus = _projectors(obs)
    return plus.copy(), minus.copy()


class ObservableSet(Enum):
    """The observable families a measurement program may be restricted to.

    ``S1``: ``Z (x) X`` plus every planar observable.
    ``S2``: ``Z (x) X``, ``Y`` and ``(X + Y)/sqrt2``.
    ``S3``: ``Z (x) X`` and ``Y``.
    """

    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    UNRESTRICTED = "UNRESTRICTED"

    @classmethod
    def from_name(cls, name: str) -> "ObservableSet":
        key = name.strip().upper()
        if key in ("ANY", "UNRESTRICTED"):
            return cls.UNRESTRICTED
        try:
            return cls(key)
        except ValueError:
            raise InputError(f"unknown observable set {name!r}") from None

    def admits(self, obs: Observable) -> bool:
        if self is ObservableSet.UNRESTRICTED:
            return True
        if obs.factors == ("Z", "X"):
            return True
        if obs.arity != 1:
            return False
        angle = planar_angle(obs.factors[0])
        if angle is None:
            return False
        if self is ObservableSet.S1:
            return True
        allowed = [math.pi / 2]
        if self is ObservableSet.S2:
            allowed.append(math.pi / 4)
        return any(abs(angle - a) < _ANGLE_TOL for a in allowed)

    def issubset(self, other: "ObservableSet") -> bool:
        """Set inclusion along the chain ``S3 < S2 < S1 < UNRESTRICTED``."""
        order = [ObservableSet.S3, ObservableSet.S2, ObservableSet.S1, ObservableSet.UNRESTRICTED]
        return order.index(self) <= order.index(other)


# Measuring -----------------------------------------------------------------


class MeasurementOutcome(NamedTuple):
    value: int
    probability: float
    post_state: StateVector


def _branches(state: StateVector, obs: Observable, targets: Sequence[int]):
    axes = check_targets(state.num_qubits, targets, obs.arity)
    plus, _ = _projectors(obs)
    v_plus = apply_matrix_raw(state.amplitudes, plus, axes)
    v_minus = state.amplitudes - v_plus
    p_plus = float(np.vdot(v_plus, v_plus).real)
    p_minus = float(np.vdot(v_minus, v_minus).real)
    return (v_plus, p_plus), (v_minus, p_minus)


def _renormalized(v: np.ndarray, p: float) -> StateVector:
    return StateVector(v / math.sqrt(p))


def measure(
    state: StateVector,
    obs: Observable,
    targets: Sequence[int],
    rng: np.random.Generator,
) -> MeasurementOutcome:
    """Sample a Born-rule outcome of ``obs`` on ``targets``.

    Exactly one uniform draw is taken from ``rng`` per call, whatever the
    outcome probabilities, so a seeded generator replays a run exactly.
    """
    (v_plus, p_plus), (v_minus, p_minus) = _branches(state, obs, targets)
    r = rng.random()
    total = p_plus + p_minus
    if p_plus < ZERO_PROBABILITY:
        take_plus = False
    elif p_minus < ZERO_PROBABILITY:
        take_plus = True
    else:
        take_plus = r * total < p_plus
    if take_plus:
        return MeasurementOutcome(1, p_plus / total, _renormalized(v_plus, p_plus))
    return MeasurementOutcome(-1, p_minus / total, _renormalized(v_minus, p_minus))


def measure_forced(
    state: StateVector, obs: Observable, targets: Sequence[int], forced: int
) -> tuple[float, StateVector | None]:
    """Project onto the ``forced`` (+1 or -1) eigenspace.

    Returns the Born probability of that outcome and the renormalized state.
    When the probability is below 1e-14 the branch is treated as impossible
    and the state is ``None``.
    """
    if forced not in (1, -1):
        raise InputError(f"forced outcome must be +1 or -1, got {forced!r}")
    (v_plus, p_plus), (v_minus, p_minus) = _branches(state, obs, targets)
    v, p = (v_plus, p_plus) if forced == 1 else (v_minus, p_minus)
    if p < ZERO_PROBABILITY:
        return 0.0, None
    return p, _renormalized(v, p)


class Branch(NamedTuple):
    outcomes: tuple[int, ...]
    probability: float
    state: StateVector


def enumerate_branches(
    state: StateVector,
    instructions: Iterable[tuple[Observable, Sequence[int]]],
    limit: int = DEFAULT_ENUMERATION_LIMIT,
) -> list[Branch]:
    """All outcome sequences of a fixed measurement list with nonzero probability.

    Branches are listed depth-first with +1 before -1. The joint probability
    of a branch is the product of the forced-outcome probabilities.
    """
    instructions = list(instructions)
    if len(instructions) > limit:
        raise ResourceError(
            f"{len(instructions)} measurements exceed the enumeration limit of {limit}"
        )
    result: list[Branch] = []

    def walk(current: StateVector, depth: int, outcomes: tuple[int, ...], prob: float):
        if depth == len(instructions):
            result.append(Branch(outcomes, prob, current))
            return
        obs, targets = instructions[depth]
        for value in (1, -1):
            p, post = measure_forced(current, obs, targets, value)
            if post is None:
                continue
            walk(post, depth + 1, outcomes + (value,), prob * p)

    walk(state, 0, (), 1.0)
    return result


# Outcome sources -------------------------------------------------------------


class Sampler:
    """Outcome source that samples with Born probabilities from a seeded generator."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def __call__(self, state: StateVector, obs: Observable, targets: Sequence[int]):
        return measure(state, obs, targets, self.rng)


class ForcedOutcomes:
    """Outcome source that replays a fixed sequence of +1/-1 outcomes.

    Raises :class:`ZeroProbabilityError` on an impossible outcome and
    :class:`InputError` when the sequence runs out.
    """

    def __init__(self, outcomes: Iterable[int]):
        self._outcomes = list(outcomes)
        self.position = 0

    @property
    def remaining(self) -> int:
        return len(self._outcomes) - self.position

    def __call__(self, state: StateVector, obs: Observable, targets: Sequence[int]):
        if self.position >= len(self._outcomes):
            raise InputError("forced outcome sequence exhausted")
        value = self._outcomes[self.position]
        self.position += 1
        p, post = measure_forced(state, obs, targets, value)
        if post is None:
            raise ZeroProbabilityError(
                f"forced outcome {value:+d} of {obs} on {tuple(targets)} is impossible"
            )
        return MeasurementOutcome(value, p, post)


def outcome_source(rng: np.random.Generator | None = None, forced: Iterable[int] | None = None):
    """Build a :class:`Sampler` or :class:`ForcedOutcomes`; exactly one argument must be given."""
    if (rng is None) == (forced is None):
        raise InputError("pass exactly one of rng or forced")
    if forced is not None:
        return ForcedOutcomes(forced)
    return Sampler(rng)
