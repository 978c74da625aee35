"""Quantum dialogue over four-particle GHZ states with a double CNOT.

CNOT(b -> c) followed by CNOT(b -> d) splits each of the four GHZ states into
a Bell pair on (a, b) and a computational basis state on (c, d). Bob reads
(c, d) in Z (x) Z to learn the Bell pair; Alice knows it because she chose the
GHZ state. Both then add a Pauli, Bob on b and Alice on a, and Alice
announces her Bell measurement of (a, b).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .channel import NO_ADVERSARY, AdversaryModel, RunOutcome, Transcript, announce, finish
from .protocol_bell import IntegrityError, transmit, validate_bits
from .protocol_w import PAULI_BIT_CODE, pauli_image
from .qcore import (
    BELL,
    BELL_KINDS,
    CNOT,
    GHZ_KINDS,
    ZZ,
    ParticleLabel,
    QubitPool,
    StateVector,
    measure,
    normalize_symbol,
    prepare_ghz4,
    rng_streams,
)

# Z (x) Z readout of (c, d) after the double CNOT -> Bell state of (a, b).
CD_TO_BELL = {"00": "phi+", "01": "phi-", "10": "psi+", "11": "psi-"}

# What Alice knows about (a, b) from the GHZ state she prepared.
GHZ_TO_BELL = {"G1": "phi+", "G2": "phi-", "G3": "psi+", "G4": "psi-"}


class CDReadout(NamedTuple):
    bell: str
    cd_bits: str
    remaining: StateVector
    probability: float


def readout_cd(state: StateVector, rng: np.random.Generator | None = None) -> CDReadout:
    """Measure the last two qubits of an (a, b, c, d) register in Z (x) Z."""
    if state.n_qubits != 4:
        raise ValueError("readout needs a four-qubit (a, b, c, d) register")
    rng = np.random.default_rng(0) if rng is None else rng
    out = measure(state, state.labels[2:], ZZ, rng)
    return CDReadout(CD_TO_BELL[out.index], out.index, out.collapsed, out.probability)


def decode_ghz(role: str, own_bits: str, initial: str, announced: str) -> str:
    """Solve (U_A (x) U_B) |initial> = |announced> for the other party's Pauli.

    ``role`` is the decoding party: Bob knows U_B and solves for Alice's bits,
    Alice knows U_A and solves for Bob's.
    """
    announced = normalize_symbol(announced)
    initial = normalize_symbol(initial)
    if announced not in BELL_KINDS or initial not in BELL_KINDS:
        raise IntegrityError(f"{initial!r} -> {announced!r} are not both Bell states")
    own_side = {"bob": 1, "alice": 0}[role]
    middle = pauli_image(own_bits, initial, own_side)
    hits = [bits for bits in PAULI_BIT_CODE if pauli_image(bits, middle, 1 - own_side) == announced]
    if len(hits) != 1:
        raise IntegrityError(f"{announced!r} is not reachable from {initial!r}")
    return hits[0]


def run_ghz(
    alice_bits: str,
    bob_bits: str,
    seed: int = 0,
    adversary: AdversaryModel = NO_ADVERSARY,
    *,
    decoys: int = 0,
    ghz_kind: str | None = None,
) -> RunOutcome:
    validate_bits(alice_bits, 2, "Alice's")
    validate_bits(bob_bits, 2, "Bob's")
    rngs = rng_streams(seed)
    kind = GHZ_KINDS[int(rngs["prepare"].integers(4))]
    if ghz_kind is not None:
        if ghz_kind not in GHZ_KINDS:
            raise ValueError(f"unknown GHZ state {ghz_kind!r}")
        kind = ghz_kind
    params = {"adversary": adversary.kind, "decoys": decoys, "ghz_kind": ghz_kind}
    transcript = Transcript("ghz", seed, params)
    a, b, c, d = (ParticleLabel(0, r) for r in "abcd")
    prepared = prepare_ghz4(kind, (a, b, c, d))
    pool = QubitPool([prepared])

    def abort(check_id: str) -> RunOutcome:
        transcript.log_abort(check_id)
        return finish(transcript, "ghz", pool, aborted_check=check_id)

    # b, c and d travel in three separate blocks.
    for k, (label, name) in enumerate(((b, "B"), (c, "C"), (d, "D"))):
        check_id = f"decoy_{name}"
        if not transmit(
            pool, [label], name, "alice", "bob", adversary, decoys, rngs, transcript, check_id, k * decoys
        ):
            return abort(check_id)

    pool.apply(CNOT, [b, c])
    pool.apply(CNOT, [b, d])
    cd = pool.measure([c, d], ZZ, rngs["measure"]).index
    bob_known = CD_TO_BELL[cd]
    pool.apply(PAULI_BIT_CODE[bob_bits], [b])

    if not transmit(
        pool, [b], "B'", "bob", "alice", adversary, decoys, rngs, transcript, "decoy_B'", 3 * decoys
    ):
        return abort("decoy_B'")
    pool.apply(PAULI_BIT_CODE[alice_bits], [a])
    result = pool.measure([a, b], BELL, rngs["measure"]).index
    announce("alice", "bell_result", result, transcript)

    return finish(
        transcript,
        "ghz",
        pool,
        alice_decoded=decode_ghz("alice", alice_bits, GHZ_TO_BELL[kind], result),
        bob_decoded=decode_ghz("bob", bob_bits, bob_known, result),
        efficiency_inputs=(len(alice_bits) + len(bob_bits), prepared.n_qubits, BELL.bits),
        measurement_kinds=frozenset({"ZZ", "BELL"}),
    )
