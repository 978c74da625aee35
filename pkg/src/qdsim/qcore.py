"""Small statevector engine for labeled qubit registers.

Registers hold at most ``MAX_QUBITS`` qubits. Kets are written with the first
label as the leftmost symbol, so ``amps[0b01]`` on labels ``("a", "b")`` is the
amplitude of ``|0>_a |1>_b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Hashable, Iterable, Sequence

import numpy as np

MAX_QUBITS = 5
NORM_TOL = 1e-12
AMP_TOL = 1e-9

Label = Hashable

_S = 1 / np.sqrt(2)


@dataclass(frozen=True, order=True)
class ParticleLabel:
    """Identity of one qubit inside a protocol run."""

    index: int
    role: str
    purpose: str = "message"

    ROLES = ("a", "b", "c", "d")
    PURPOSES = ("message", "check", "decoy")

    def __post_init__(self):
        if self.role not in self.ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.purpose not in self.PURPOSES:
            raise ValueError(f"unknown purpose {self.purpose!r}")

    def __str__(self) -> str:
        if self.purpose == "message":
            return f"{self.role}{self.index}"
        return f"{self.purpose}:{self.role}{self.index}"


def normalize_symbol(symbol: str) -> str:
    """Accept the typographic minus sign as an alias for ``-``."""
    return symbol.replace("−", "-")


# ---------------------------------------------------------------------------
# State vectors


@dataclass(frozen=True, eq=False)
class StateVector:
    labels: tuple
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels}")
        if len(labels) > MAX_QUBITS:
            raise ValueError(f"register of {len(labels)} qubits exceeds {MAX_QUBITS}")
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.shape[0] != 2 ** len(labels):
            raise ValueError(
                f"{amps.shape[0]} amplitudes for {len(labels)} labels"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm})")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    def __contains__(self, label) -> bool:
        return label in self.labels

    def amplitude(self, bits: str) -> complex:
        """Amplitude of the product basis ket spelled by ``bits``."""
        if len(bits) != self.n_qubits:
            raise ValueError(f"expected {self.n_qubits} bits, got {bits!r}")
        return complex(self.amps[int(bits, 2)])

    def reorder(self, labels: Sequence[Label]) -> "StateVector":
        labels = tuple(labels)
        if set(labels) != set(self.labels) or len(labels) != len(self.labels):
            raise ValueError(f"{labels} is not a permutation of {self.labels}")
        if labels == self.labels:
            return self
        axes = [self.labels.index(lab) for lab in labels]
        tensor = self.amps.reshape((2,) * self.n_qubits).transpose(axes)
        return StateVector(labels, tensor.reshape(-1))

    def kron(self, other: "StateVector") -> "StateVector":
        return StateVector(self.labels + other.labels, np.kron(self.amps, other.amps))

    def inner(self, other: "StateVector") -> complex:
        """<self|other>, after aligning ``other`` to this label order."""
        return complex(np.vdot(self.amps, other.reorder(self.labels).amps))

    def __str__(self) -> str:
        n = self.n_qubits
        terms = []
        for idx, amp in enumerate(self.amps):
            if abs(amp) > AMP_TOL:
                terms.append(f"({amp.real:+.4f}{amp.imag:+.4f}j)|{idx:0{n}b}>")
        names = ",".join(str(lab) for lab in self.labels)
        return " ".join(terms) + f" [{names}]"


_SINGLE = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([_S, _S], dtype=complex),
    "-": np.array([_S, -_S], dtype=complex),
}

_BELL = {
    "phi+": np.array([_S, 0, 0, _S], dtype=complex),
    "phi-": np.array([_S, 0, 0, -_S], dtype=complex),
    "psi+": np.array([0, _S, _S, 0], dtype=complex),
    "psi-": np.array([0, _S, -_S, 0], dtype=complex),
}

BELL_KINDS = tuple(_BELL)
GHZ_KINDS = ("G1", "G2", "G3", "G4")

# (positive term, negative-or-positive term, sign)
_GHZ = {
    "G1": ("0000", "1111", +1),
    "G2": ("0001", "1110", -1),
    "G3": ("0101", "1010", +1),
    "G4": ("0100", "1011", -1),
}


def _check_labels(labels: Sequence[Label], n: int) -> tuple:
    labels = tuple(labels)
    if len(labels) != n:
        raise ValueError(f"expected {n} labels, got {len(labels)}")
    if len(set(labels)) != n:
        raise ValueError(f"duplicate labels in {labels}")
    return labels


def empty_state() -> StateVector:
    return StateVector((), np.ones(1, dtype=complex))


def prepare_single(symbol: str, label: Label) -> StateVector:
    """One qubit in ``|0>``, ``|1>``, ``|+>`` or ``|->``."""
    symbol = normalize_symbol(symbol)
    if symbol not in _SINGLE:
        raise ValueError(f"unknown single-qubit state {symbol!r}")
    return StateVector((label,), _SINGLE[symbol])


def prepare_basis(bits: str, labels: Sequence[Label]) -> StateVector:
    labels = _check_labels(labels, len(bits))
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int(bits, 2)] = 1
    return StateVector(labels, amps)


def prepare_bell(kind: str, labels: Sequence[Label]) -> StateVector:
    kind = normalize_symbol(kind)
    if kind not in _BELL:
        raise ValueError(f"unknown Bell state {kind!r}")
    return StateVector(_check_labels(labels, 2), _BELL[kind])


def prepare_w(labels: Sequence[Label]) -> StateVector:
    """The three-qubit W-type state (|001> + |010> - |100> + |111>)/2."""
    amps = np.zeros(8, dtype=complex)
    amps[0b001] = amps[0b010] = amps[0b111] = 0.5
    amps[0b100] = -0.5
    return StateVector(_check_labels(labels, 3), amps)


def prepare_ghz4(kind: str, labels: Sequence[Label]) -> StateVector:
    if kind not in _GHZ:
        raise ValueError(f"unknown GHZ state {kind!r}")
    first, second, sign = _GHZ[kind]
    amps = np.zeros(16, dtype=complex)
    amps[int(first, 2)] = _S
    amps[int(second, 2)] = sign * _S
    return StateVector(_check_labels(labels, 4), amps)


# ---------------------------------------------------------------------------
# Gates


@dataclass(frozen=True, eq=False)
class Gate:
    name: str
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape not in ((2, 2), (4, 4)):
            raise ValueError(f"gate {self.name} has shape {m.shape}")
        if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=NORM_TOL, rtol=0):
            raise ValueError(f"gate {self.name} is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def arity(self) -> int:
        return 1 if self.matrix.shape[0] == 2 else 2

    @property
    def dagger(self) -> "Gate":
        return Gate(self.name + "^dag", self.matrix.conj().T)


I = Gate("I", np.eye(2))
SIGMA_X = Gate("SIGMA_X", [[0, 1], [1, 0]])
SIGMA_Z = Gate("SIGMA_Z", [[1, 0], [0, -1]])
# i*sigma_y = |0><1| - |1><0|
I_SIGMA_Y = Gate("I_SIGMA_Y", [[0, 1], [-1, 0]])
CNOT = Gate("CNOT", [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
U_EX = Gate("U_EX", [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])

GATES = {g.name: g for g in (I, SIGMA_X, SIGMA_Z, I_SIGMA_Y, CNOT, U_EX)}


def _positions(state: StateVector, targets: Sequence[Label]) -> list[int]:
    targets = tuple(targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"repeated target in {targets}")
    try:
        return [state.labels.index(t) for t in targets]
    except ValueError:
        missing = [t for t in targets if t not in state.labels]
        raise ValueError(f"unknown label(s) {missing}") from None


def apply_gate(state: StateVector, gate: Gate, targets: Sequence[Label]) -> StateVector:
    """Apply ``gate`` to ``targets``; for CNOT the first target is the control."""
    targets = tuple(targets)
    if len(targets) != gate.arity:
        raise ValueError(f"{gate.name} acts on {gate.arity} qubit(s), got {len(targets)}")
    axes = _positions(state, targets)
    n, k = state.n_qubits, gate.arity
    tensor = state.amps.reshape((2,) * n)
    gate_t = gate.matrix.reshape((2,) * (2 * k))
    out = np.tensordot(gate_t, tensor, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return StateVector(state.labels, out.reshape(-1))


# ---------------------------------------------------------------------------
# Measurement


@dataclass(frozen=True)
class MeasurementBasis:
    kind: str

    KINDS = ("Z", "X", "BELL", "ZZ")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown basis {self.kind!r}")

    @property
    def arity(self) -> int:
        return 1 if self.kind in ("Z", "X") else 2

    @property
    def bits(self) -> int:
        """Classical bits needed to announce one outcome."""
        return (len(self.outcomes) - 1).bit_length()

    @property
    def outcomes(self) -> tuple[str, ...]:
        return tuple(_BASIS_VECTORS[self.kind])

    def vector(self, outcome: str) -> np.ndarray:
        return _BASIS_VECTORS[self.kind][normalize_symbol(outcome)]


_BASIS_VECTORS = {
    "Z": {"0": _SINGLE["0"], "1": _SINGLE["1"]},
    "X": {"+": _SINGLE["+"], "-": _SINGLE["-"]},
    "BELL": _BELL,
    "ZZ": {f"{i:02b}": np.eye(4, dtype=complex)[i] for i in range(4)},
}

# Rows are <outcome| so that rows @ amplitudes projects onto every outcome.
_BASIS_ROWS = {
    kind: np.array([v.conj() for v in vectors.values()]) for kind, vectors in _BASIS_VECTORS.items()
}

Z = MeasurementBasis("Z")
X = MeasurementBasis("X")
BELL = MeasurementBasis("BELL")
ZZ = MeasurementBasis("ZZ")
BASES = {b.kind: b for b in (Z, X, BELL, ZZ)}


def basis_of(symbol: str) -> MeasurementBasis:
    """Basis whose outcome set contains ``symbol``."""
    symbol = normalize_symbol(symbol)
    for basis in (Z, X, BELL):
        if symbol in _BASIS_VECTORS[basis.kind]:
            return basis
    raise ValueError(f"{symbol!r} is not a basis-state symbol")


@dataclass(frozen=True)
class MeasurementOutcome:
    basis: MeasurementBasis
    index: str
    collapsed: StateVector
    probability: float


def _split(state: StateVector, targets: Sequence[Label]) -> tuple[np.ndarray, tuple]:
    """Reshape amplitudes to (2**k, rest) with ``targets`` as the row index."""
    axes = _positions(state, targets)
    rest = [i for i in range(state.n_qubits) if i not in axes]
    tensor = state.amps.reshape((2,) * state.n_qubits).transpose(axes + rest)
    matrix = tensor.reshape(2 ** len(axes), -1)
    return matrix, tuple(state.labels[i] for i in rest)


def outcome_probabilities(
    state: StateVector, targets: Sequence[Label], basis: MeasurementBasis
) -> dict[str, float]:
    """Exact Born probabilities of every outcome (no sampling)."""
    if len(tuple(targets)) != basis.arity:
        raise ValueError(f"{basis.kind} measures {basis.arity} qubit(s)")
    matrix, _ = _split(state, targets)
    projections = _BASIS_ROWS[basis.kind] @ matrix
    probs = np.einsum("ij,ij->i", projections.conj(), projections).real
    return dict(zip(basis.outcomes, probs.tolist()))


def measure(
    state: StateVector,
    targets: Sequence[Label],
    basis: MeasurementBasis,
    rng: np.random.Generator | None,
    force: str | None = None,
) -> MeasurementOutcome:
    """Projective measurement; measured qubits leave the register.

    ``force`` post-selects a given outcome instead of sampling. It is used by
    exact enumeration and raises if the outcome has zero probability.
    """
    targets = tuple(targets)
    if len(targets) != basis.arity:
        raise ValueError(f"{basis.kind} measures {basis.arity} qubit(s), got {len(targets)}")
    matrix, rest = _split(state, targets)
    projections = _BASIS_ROWS[basis.kind] @ matrix
    probs = np.einsum("ij,ij->i", projections.conj(), projections).real.tolist()
    if force is not None:
        force = normalize_symbol(force)
        pick = basis.outcomes.index(force)
        if probs[pick] <= AMP_TOL**2:
            raise ValueError(f"forced outcome {force!r} has probability {probs[pick]}")
    else:
        if rng is None:
            raise ValueError("an rng is required unless the outcome is forced")
        u = rng.random() * sum(probs)
        pick = len(probs) - 1
        acc = 0.0
        for i, p in enumerate(probs):
            acc += p
            if u < acc and p > 0:
                pick = i
                break
        while probs[pick] <= 0:  # guard the float edge at the top of the range
            pick -= 1
    collapsed = StateVector(rest, projections[pick] / np.sqrt(probs[pick]))
    return MeasurementOutcome(basis, basis.outcomes[pick], collapsed, probs[pick])


# ---------------------------------------------------------------------------
# Comparisons and diagnostics


def equal_up_to_global_phase(s1: StateVector, s2: StateVector, tol: float = AMP_TOL) -> bool:
    if set(s1.labels) != set(s2.labels):
        raise ValueError(f"label sets differ: {s1.labels} vs {s2.labels}")
    return abs(s1.inner(s2)) >= 1 - tol


def identify(state: StateVector, basis: MeasurementBasis) -> str | None:
    """Name of the basis state equal to ``state`` up to phase, if any."""
    if state.n_qubits != basis.arity:
        raise ValueError(f"{basis.kind} states have {basis.arity} qubit(s)")
    for name in basis.outcomes:
        if abs(np.vdot(basis.vector(name), state.amps)) >= 1 - AMP_TOL:
            return name
    return None


def schmidt_rank(state: StateVector, left: Sequence[Label], tol: float = AMP_TOL) -> int:
    matrix, _ = _split(state, left)
    return int(np.sum(np.linalg.svd(matrix, compute_uv=False) > tol))


def product(states: Iterable[StateVector]) -> StateVector:
    states = list(states)
    if not states:
        return empty_state()
    return reduce(StateVector.kron, states)


# ---------------------------------------------------------------------------
# Collections of independent registers


class QubitPool:
    """Many small registers addressed by qubit label.

    Protocol runs move dozens of qubits around, far more than one register can
    hold, but entanglement never spans more than a single prepared state. Each
    label maps to the register it currently lives in; gates touching two
    registers merge them. ``path_probability`` accumulates the probability of
    every measurement outcome seen so far.
    """

    def __init__(self, states: Iterable[StateVector] = ()):
        self._registers: dict[int, StateVector] = {}
        self._owner: dict[Label, int] = {}
        self._next = 0
        self.path_probability = 1.0
        for state in states:
            self.add(state)

    @property
    def labels(self) -> tuple:
        return tuple(self._owner)

    def __contains__(self, label) -> bool:
        return label in self._owner

    def add(self, state: StateVector) -> None:
        clash = [lab for lab in state.labels if lab in self._owner]
        if clash:
            raise ValueError(f"labels already present: {clash}")
        key = self._next
        self._next += 1
        self._registers[key] = state
        for lab in state.labels:
            self._owner[lab] = key

    def state_of(self, label: Label) -> StateVector:
        try:
            return self._registers[self._owner[label]]
        except KeyError:
            raise ValueError(f"unknown label {label!r}") from None

    def _take(self, targets: Sequence[Label]) -> StateVector:
        """Remove and merge the registers holding ``targets``."""
        keys = []
        for t in targets:
            if t not in self._owner:
                raise ValueError(f"unknown label {t!r}")
            if self._owner[t] not in keys:
                keys.append(self._owner[t])
        merged = product(self._registers.pop(k) for k in keys)
        for lab in merged.labels:
            del self._owner[lab]
        return merged

    def _put(self, state: StateVector) -> None:
        if state.n_qubits:
            self.add(state)

    def apply(self, gate: Gate, targets: Sequence[Label]) -> None:
        self._put(apply_gate(self._take(targets), gate, targets))

    def measure(
        self,
        targets: Sequence[Label],
        basis: MeasurementBasis,
        rng: np.random.Generator | None,
        force: str | None = None,
    ) -> MeasurementOutcome:
        outcome = measure(self._take(targets), targets, basis, rng, force)
        self._put(outcome.collapsed)
        self.path_probability *= outcome.probability
        return outcome

    def to_state(self, labels: Sequence[Label] | None = None) -> StateVector:
        """Joint state of the registers holding ``labels`` (all by default)."""
        labels = self.labels if labels is None else tuple(labels)
        keys = list(dict.fromkeys(self._owner[lab] for lab in labels))
        joint = product(self._registers[k] for k in keys)
        if set(joint.labels) != set(labels):
            raise ValueError("requested labels share registers with other qubits")
        return joint.reorder(labels)


# ---------------------------------------------------------------------------
# Randomness

RNG_PURPOSES = ("prepare", "positions", "basis", "shuffle", "measure", "decoy", "eve", "message")


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent deterministic generators, one per purpose."""
    seed = int(seed) & (2**64 - 1)
    return {
        name: np.random.default_rng([seed, i]) for i, name in enumerate(RNG_PURPOSES)
    }
