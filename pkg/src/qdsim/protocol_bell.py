"""Quantum dialogue over Bell pairs, disentangled by Bob's CNOT.

Alice prepares EPR pairs and ships them to Bob in two blocks, each followed by
an eavesdropping check. Bob applies CNOT (a control, b target), so every pair
falls apart into a single |+>/|-> qubit and a single |0>/|1> qubit. Alice
knows those states from her preparation; Bob learns them by measuring in X
and Z. He re-prepares the qubits, shuffles them into sequence C, encodes his
bits with I / i*sigma_y and sends them back behind decoy photons. Alice adds
her own bits the same way and announces her measurement results. Each side
decodes with its private knowledge of the collapsed states, which Eve lacks.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .channel import (
    NO_ADVERSARY,
    AdversaryModel,
    RunOutcome,
    Transcript,
    announce,
    finish,
    send_quantum,
)
from .qcore import (
    BELL,
    BELL_KINDS,
    CNOT,
    I,
    I_SIGMA_Y,
    X,
    Z,
    Label,
    MeasurementBasis,
    ParticleLabel,
    QubitPool,
    StateVector,
    apply_gate,
    basis_of,
    normalize_symbol,
    prepare_bell,
    prepare_single,
    rng_streams,
)


class IntegrityError(ValueError):
    """An announcement cannot have come from an honest run."""


BIT_GATES = {0: I, 1: I_SIGMA_Y}

# State of (a, b) after CNOT(a -> b) on each Bell state.
COLLAPSE = {
    "phi+": ("+", "0"),
    "phi-": ("-", "0"),
    "psi+": ("+", "1"),
    "psi-": ("-", "1"),
}

# Whether the two halves of each Bell state agree when both are measured in
# the same single-qubit basis.
SAME_RESULT = {
    "phi+": {"Z": True, "X": True},
    "phi-": {"Z": True, "X": False},
    "psi+": {"Z": False, "X": True},
    "psi-": {"Z": False, "X": False},
}

_FLIP = {"0": "1", "1": "0", "+": "-", "-": "+"}
DECOY_STATES = ("0", "1", "+", "-")


def validate_bits(bits: str, length: int, who: str) -> str:
    if not isinstance(bits, str) or len(bits) != length or set(bits) - {"0", "1"}:
        raise ValueError(f"{who} message must be {length} bits of 0/1, got {bits!r}")
    return bits


@dataclass(frozen=True)
class BellRunParams:
    """Sizes, seed and adversary for one run.

    ``bell_states`` and ``c_order`` pin the message-pair preparations and the
    sequence-C permutation; exhaustive tests and the leakage enumeration use
    them. ``leak_initial_states`` turns on a deliberately broken variant in
    which Alice publishes her preparations.
    """

    n: int = 4
    delta1: int = 4
    delta2: int = 4
    delta3: int = 4
    seed: int = 0
    adversary: AdversaryModel = NO_ADVERSARY
    bell_states: tuple[str, ...] | None = None
    c_order: tuple[int, ...] | None = None
    leak_initial_states: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if min(self.delta1, self.delta2, self.delta3) < 0:
            raise ValueError("check sizes must be non-negative")
        if self.bell_states is not None:
            states = tuple(normalize_symbol(s) for s in self.bell_states)
            if len(states) != self.n or set(states) - set(BELL_KINDS):
                raise ValueError(f"bell_states must name {self.n} Bell states")
            object.__setattr__(self, "bell_states", states)
        if self.c_order is not None:
            order = tuple(int(i) for i in self.c_order)
            if sorted(order) != list(range(2 * self.n)):
                raise ValueError(f"c_order must permute range({2 * self.n})")
            object.__setattr__(self, "c_order", order)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["adversary"] = self.adversary.kind
        for key in ("bell_states", "c_order"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d


@dataclass(frozen=True)
class CEntry:
    label: Label
    origin: str
    prepared: str


@dataclass
class SequenceC:
    entries: list[CEntry] = field(default_factory=list)

    @property
    def position_record(self) -> list[str]:
        return [e.origin for e in self.entries]

    @property
    def labels(self) -> list[Label]:
        return [e.label for e in self.entries]


@dataclass(frozen=True)
class Decoy:
    position: int
    label: Label
    state: str


# ---------------------------------------------------------------------------
# Single-qubit coding


def encode_bit(state: StateVector, bit: int, label: Label | None = None) -> StateVector:
    """Bit 0 leaves the qubit alone, bit 1 applies i*sigma_y."""
    if label is None:
        (label,) = state.labels
    return apply_gate(state, BIT_GATES[int(bit)], [label])


def flipped(symbol: str, bit: int) -> str:
    return _FLIP[symbol] if int(bit) else symbol


def decode(own_bits: str, initial: Sequence[str], announced: Sequence[str]) -> str:
    """Recover the other party's bits.

    Both unitaries keep Z and X eigenstates in their basis and i*sigma_y flips
    them, so each particle's announced state is its collapsed state flipped by
    ``own XOR other``.
    """
    if not len(own_bits) == len(initial) == len(announced):
        raise ValueError("own bits, initial states and announcements differ in length")
    out = []
    for bit, start, seen in zip(own_bits, initial, announced):
        seen = normalize_symbol(seen)
        if basis_of(seen) != basis_of(start):
            raise IntegrityError(f"announced {seen!r} is not in the basis of {start!r}")
        out.append(str(int(seen != start) ^ int(bit)))
    return "".join(out)


# ---------------------------------------------------------------------------
# Eavesdropping checks


def security_check_1(
    pool: QubitPool,
    pairs: Sequence[tuple[int, Label, Label, str]],
    transcript: Transcript,
    rng_basis: np.random.Generator,
    rng_measure: np.random.Generator,
) -> bool:
    """Correlation check on ``(position, a, b, kind)`` checking pairs.

    Bob measures each particle a in a random Z/X basis and publishes basis and
    result; Alice measures the partner b in the same basis and compares.
    """
    if not pairs:
        return True
    announce("alice", "check1_positions", [p for p, *_ in pairs], transcript)
    bases = [Z if rng_basis.random() < 0.5 else X for _ in pairs]
    bob_results = [
        pool.measure([a], basis, rng_measure).index for (_, a, _, _), basis in zip(pairs, bases)
    ]
    announce("bob", "check1_bases", [b.kind for b in bases], transcript)
    announce("bob", "check1_results", bob_results, transcript)
    passed = True
    for (_, _, b, kind), basis, theirs in zip(pairs, bases, bob_results):
        mine = pool.measure([b], basis, rng_measure).index
        if (mine == theirs) != SAME_RESULT[kind][basis.kind]:
            passed = False
    transcript.log_check("check1", passed)
    return passed


def security_check_2(
    pool: QubitPool,
    pairs: Sequence[tuple[int, Label, Label, str]],
    transcript: Transcript,
    rng_measure: np.random.Generator,
) -> bool:
    """Bob Bell-measures each checking pair; Alice compares with what she made."""
    if not pairs:
        return True
    announce("alice", "check2_positions", [p for p, *_ in pairs], transcript)
    results = [pool.measure([a, b], BELL, rng_measure).index for _, a, b, _ in pairs]
    announce("bob", "check2_results", results, transcript)
    passed = all(r == kind for r, (*_, kind) in zip(results, pairs))
    transcript.log_check("check2", passed)
    return passed


def insert_decoys(
    pool: QubitPool,
    labels: Sequence[Label],
    count: int,
    rng_state: np.random.Generator,
    rng_position: np.random.Generator,
    first_index: int = 0,
) -> tuple[list[Label], list[Decoy]]:
    """Prepare ``count`` random decoys and splice them into ``labels``."""
    labels = list(labels)
    if count == 0:
        return labels, []
    total = len(labels) + count
    positions = sorted(int(p) for p in rng_position.choice(total, size=count, replace=False))
    states = [DECOY_STATES[int(i)] for i in rng_state.integers(4, size=count)]
    decoys = []
    for k, (pos, symbol) in enumerate(zip(positions, states)):
        label = ParticleLabel(first_index + k, "d", "decoy")
        pool.add(prepare_single(symbol, label))
        decoys.append(Decoy(pos, label, symbol))
    merged, it = [], iter(labels)
    slots = {d.position: d.label for d in decoys}
    for pos in range(total):
        merged.append(slots[pos] if pos in slots else next(it))
    return merged, decoys


def decoy_check(
    pool: QubitPool,
    decoys: Sequence[Decoy],
    sender: str,
    receiver: str,
    transcript: Transcript,
    rng_measure: np.random.Generator,
    check_id: str,
) -> bool:
    """Receiver measures each decoy in the basis the sender names."""
    if not decoys:
        return True
    bases = [basis_of(d.state) for d in decoys]
    announce(sender, f"{check_id}_positions", [d.position for d in decoys], transcript)
    announce(sender, f"{check_id}_bases", [b.kind for b in bases], transcript)
    results = [pool.measure([d.label], b, rng_measure).index for d, b in zip(decoys, bases)]
    announce(receiver, f"{check_id}_results", results, transcript)
    passed = all(r == d.state for r, d in zip(results, decoys))
    transcript.log_check(check_id, passed)
    return passed


def transmit(
    pool: QubitPool,
    labels: Sequence[Label],
    sequence: str,
    sender: str,
    receiver: str,
    adversary: AdversaryModel,
    n_decoys: int,
    rngs: dict[str, np.random.Generator],
    transcript: Transcript,
    check_id: str,
    first_decoy: int = 0,
) -> bool:
    """Block-send ``labels`` with ``n_decoys`` decoys mixed in, then check them."""
    merged, decoys = insert_decoys(
        pool, labels, n_decoys, rngs["decoy"], rngs["positions"], first_decoy
    )
    send_quantum(merged, pool, adversary, rngs["eve"], transcript, sequence, f"{sender}->{receiver}")
    announce(receiver, "received", sequence, transcript)
    return decoy_check(pool, decoys, sender, receiver, transcript, rngs["measure"], check_id)


# ---------------------------------------------------------------------------
# Bob's auxiliary operation


def bob_cnot_measure_reproduce(
    pool: QubitPool,
    pairs: Sequence[tuple[Label, Label]],
    rng_measure: np.random.Generator,
    rng_shuffle: np.random.Generator,
    order: Sequence[int] | None = None,
) -> SequenceC:
    """CNOT each pair, read a in X and b in Z, re-prepare both and shuffle."""
    fresh = []
    for a, b in pairs:
        pool.apply(CNOT, [a, b])
        ra = pool.measure([a], X, rng_measure).index
        rb = pool.measure([b], Z, rng_measure).index
        pool.add(prepare_single(ra, a))
        pool.add(prepare_single(rb, b))
        fresh += [CEntry(a, "a", ra), CEntry(b, "b", rb)]
    perm = rng_shuffle.permutation(len(fresh)) if order is None else order
    return SequenceC([fresh[int(i)] for i in perm])


# ---------------------------------------------------------------------------
# Full run


def run_bell(alice_bits: str, bob_bits: str, params: BellRunParams = BellRunParams()) -> RunOutcome:
    n = params.n
    validate_bits(alice_bits, 2 * n, "Alice's")
    validate_bits(bob_bits, 2 * n, "Bob's")
    rngs = rng_streams(params.seed)
    transcript = Transcript("bell", params.seed, params.to_dict())
    adversary = params.adversary

    # Step 1: preparation and choice of checking pairs.
    m = n + params.delta1 + params.delta2
    kinds = [BELL_KINDS[int(i)] for i in rngs["prepare"].integers(4, size=m)]
    perm = [int(i) for i in rngs["positions"].permutation(m)]
    check1 = sorted(perm[: params.delta1])
    check2 = sorted(perm[params.delta1 : params.delta1 + params.delta2])
    message = sorted(perm[params.delta1 + params.delta2 :])
    if params.bell_states is not None:
        for k, kind in zip(message, params.bell_states):
            kinds[k] = kind
    checking = set(check1) | set(check2)
    a_of = {k: ParticleLabel(k, "a", "check" if k in checking else "message") for k in range(m)}
    b_of = {k: ParticleLabel(k, "b", "check" if k in checking else "message") for k in range(m)}
    pool = QubitPool(prepare_bell(kinds[k], (a_of[k], b_of[k])) for k in range(m))

    def abort(check_id: str) -> RunOutcome:
        transcript.log_abort(check_id)
        return finish(transcript, "bell", pool, aborted_check=check_id)

    # Step 2: sequence A and the correlation check.
    send_quantum([a_of[k] for k in range(m)], pool, adversary, rngs["eve"], transcript, "A", "alice->bob")
    announce("bob", "received", "A", transcript)
    if not security_check_1(
        pool, [(k, a_of[k], b_of[k], kinds[k]) for k in check1], transcript, rngs["basis"], rngs["measure"]
    ):
        return abort("check1")

    # Step 3: sequence B and the Bell-basis check.
    remaining = [k for k in range(m) if k not in check1]
    send_quantum([b_of[k] for k in remaining], pool, adversary, rngs["eve"], transcript, "B", "alice->bob")
    announce("bob", "received", "B", transcript)
    if not security_check_2(pool, [(k, a_of[k], b_of[k], kinds[k]) for k in check2], transcript, rngs["measure"]):
        return abort("check2")

    # Step 4: CNOT, measure, re-prepare, shuffle; Bob encodes.
    seq_c = bob_cnot_measure_reproduce(
        pool, [(a_of[k], b_of[k]) for k in message], rngs["measure"], rngs["shuffle"], params.c_order
    )
    for entry, bit in zip(seq_c.entries, bob_bits):
        pool.apply(BIT_GATES[int(bit)], [entry.label])

    # Step 5: sequence C' behind decoy photons.
    if not transmit(
        pool, seq_c.labels, "C'", "bob", "alice", adversary, params.delta3, rngs, transcript, "check3"
    ):
        return abort("check3")

    # Step 6: Alice encodes, measures in the basis implied by the origin record.
    for entry, bit in zip(seq_c.entries, alice_bits):
        pool.apply(BIT_GATES[int(bit)], [entry.label])
    announce("bob", "c_positions", [str(e.label) for e in seq_c.entries], transcript)
    results = [
        pool.measure([e.label], X if e.origin == "a" else Z, rngs["measure"]).index
        for e in seq_c.entries
    ]
    announce("alice", "results", results, transcript)
    if params.leak_initial_states:
        announce("alice", "initial_states", [kinds[k] for k in message], transcript)

    # Alice knows each collapsed state from her preparation.
    alice_known = [
        COLLAPSE[kinds[e.label.index]][0 if e.origin == "a" else 1] for e in seq_c.entries
    ]
    bob_known = [e.prepared for e in seq_c.entries]
    return finish(
        transcript,
        "bell",
        pool,
        alice_decoded=decode(alice_bits, alice_known, results),
        bob_decoded=decode(bob_bits, bob_known, results),
        efficiency_inputs=(len(alice_bits) + len(bob_bits), 2 * len(message), len(results)),
        measurement_kinds=frozenset({"X", "Z"}),
    )
