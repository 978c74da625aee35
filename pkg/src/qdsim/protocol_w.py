"""Quantum dialogue over one W-type state with a conditional exchange gate.

Bob holds particles a and b; Alice keeps c. Depending on his two-bit, Bob
swaps a and b (U_EX) or not, then measures a in Z. The outcome tells him which
Bell state (b, c) fell into, and a single optional i*sigma_y on b turns it
into the Bell state that stands for his bits. Alice applies one of four Paulis
to b and announces her Bell measurement of (b, c).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .channel import NO_ADVERSARY, AdversaryModel, RunOutcome, Transcript, finish, announce
from .protocol_bell import IntegrityError, transmit, validate_bits
from .qcore import (
    BELL,
    BELL_KINDS,
    GATES,
    I_SIGMA_Y,
    U_EX,
    Z,
    Gate,
    ParticleLabel,
    QubitPool,
    apply_gate,
    identify,
    normalize_symbol,
    prepare_bell,
    prepare_w,
    rng_streams,
)

# Bob's side: Bell state -> two-bit.
BELL_BIT_CODE = {"psi-": "00", "phi+": "01", "psi+": "10", "phi-": "11"}
BELL_FOR_BITS = {v: k for k, v in BELL_BIT_CODE.items()}

# Alice's side (and both sides of the GHZ protocol): two-bit -> Pauli.
PAULI_BIT_CODE = {
    "00": GATES["I"],
    "01": GATES["SIGMA_X"],
    "10": GATES["SIGMA_Z"],
    "11": GATES["I_SIGMA_Y"],
}

# Which Bell state (b, c) is left in after Bob's Z measurement of a, keyed by
# (whether U_EX was applied, outcome on a).
W_BRANCHES = {
    (False, "0"): "psi+",
    (False, "1"): "phi-",
    (True, "0"): "psi-",
    (True, "1"): "phi+",
}


@lru_cache(maxsize=None)
def gate_image(gate_name: str, bell: str, side: int = 0) -> str:
    """Bell label of ``gate_name`` applied to qubit ``side`` of ``bell``."""
    state = prepare_bell(bell, ("x", "y"))
    out = identify(apply_gate(state, GATES[gate_name], ["xy"[side]]), BELL)
    assert out is not None, "Paulis permute the Bell basis"
    return out


def pauli_image(bits: str, bell: str, side: int = 0) -> str:
    return gate_image(PAULI_BIT_CODE[bits].name, bell, side)


@dataclass(frozen=True)
class WEncoding:
    exchanged: bool
    a_result: str
    collapsed: str
    flipped: bool
    encoded: str


def bob_encode_w(
    bob_bits: str,
    pool: QubitPool,
    labels: tuple,
    rng,
    force_branch: str | None = None,
) -> WEncoding:
    """Bob's conditional exchange, Z readout of a and correction on b.

    ``labels`` are the (a, b, c) particles. The correction i*sigma_y is applied
    exactly when the collapsed Bell state does not already stand for
    ``bob_bits``; it moves between psi-/phi+ and between psi+/phi-.
    """
    a, b, _ = labels
    exchanged = bob_bits in ("00", "01")
    if exchanged:
        pool.apply(U_EX, [a, b])
    result = pool.measure([a], Z, rng, force=force_branch).index
    collapsed = W_BRANCHES[(exchanged, result)]
    flip = BELL_BIT_CODE[collapsed] != bob_bits
    if flip:
        pool.apply(I_SIGMA_Y, [b])
    encoded = gate_image("I_SIGMA_Y", collapsed) if flip else collapsed
    return WEncoding(exchanged, result, collapsed, flip, encoded)


def decode_w_bob(encoded: str, announced: str) -> str:
    """Alice's two-bit from Bob's encoded Bell state and her announcement."""
    announced = normalize_symbol(announced)
    if announced not in BELL_KINDS:
        raise IntegrityError(f"{announced!r} is not a Bell state")
    hits = [bits for bits in PAULI_BIT_CODE if pauli_image(bits, encoded) == announced]
    if len(hits) != 1:
        raise IntegrityError(f"{announced!r} is not reachable from {encoded!r}")
    return hits[0]


def decode_w_alice(own_bits: str, announced: str) -> str:
    """Bob's two-bit from Alice's own Pauli and her announcement."""
    announced = normalize_symbol(announced)
    if announced not in BELL_KINDS:
        raise IntegrityError(f"{announced!r} is not a Bell state")
    gate: Gate = PAULI_BIT_CODE[own_bits].dagger
    state = apply_gate(prepare_bell(announced, ("x", "y")), gate, ["x"])
    return BELL_BIT_CODE[identify(state, BELL)]


def run_w(
    alice_bits: str,
    bob_bits: str,
    seed: int = 0,
    adversary: AdversaryModel = NO_ADVERSARY,
    *,
    decoys: int = 0,
    branch: str | None = None,
) -> RunOutcome:
    """One W-state dialogue.

    ``decoys`` guards each quantum send with that many decoy photons (0 runs the
    bare exchange). ``branch`` post-selects Bob's outcome on particle a.
    """
    validate_bits(alice_bits, 2, "Alice's")
    validate_bits(bob_bits, 2, "Bob's")
    rngs = rng_streams(seed)
    params = {"adversary": adversary.kind, "decoys": decoys, "branch": branch}
    transcript = Transcript("w", seed, params)
    a, b, c = (ParticleLabel(0, r) for r in "abc")
    prepared = prepare_w((a, b, c))
    pool = QubitPool([prepared])

    def abort(check_id: str) -> RunOutcome:
        transcript.log_abort(check_id)
        return finish(transcript, "w", pool, aborted_check=check_id)

    if not transmit(pool, [a, b], "AB", "alice", "bob", adversary, decoys, rngs, transcript, "decoy_AB"):
        return abort("decoy_AB")
    enc = bob_encode_w(bob_bits, pool, (a, b, c), rngs["measure"], force_branch=branch)

    if not transmit(
        pool, [b], "B'", "bob", "alice", adversary, decoys, rngs, transcript, "decoy_B'", decoys
    ):
        return abort("decoy_B'")
    pool.apply(PAULI_BIT_CODE[alice_bits], [b])
    result = pool.measure([b, c], BELL, rngs["measure"]).index
    announce("alice", "bell_result", result, transcript)

    return finish(
        transcript,
        "w",
        pool,
        alice_decoded=decode_w_alice(alice_bits, result),
        bob_decoded=decode_w_bob(enc.encoded, result),
        efficiency_inputs=(len(alice_bits) + len(bob_bits), prepared.n_qubits, BELL.bits),
        measurement_kinds=frozenset({"Z", "BELL"}),
    )
