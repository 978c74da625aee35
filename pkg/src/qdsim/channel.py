"""Quantum and classical channels, and the run transcript they write to."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .qcore import X, Z, Label, QubitPool, StateVector, prepare_single


class TranscriptError(RuntimeError):
    """Raised when an event is appended to a closed or aborted transcript."""


@dataclass(frozen=True)
class QuantumSend:
    sequence: str
    direction: str
    labels: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "type": "quantum_send",
            "sequence": self.sequence,
            "direction": self.direction,
            "labels": list(self.labels),
        }

    def public(self) -> dict:
        # Labels name purposes and origins, so only the size is public.
        return {
            "type": "quantum_send",
            "sequence": self.sequence,
            "direction": self.direction,
            "size": len(self.labels),
        }


@dataclass(frozen=True)
class ClassicalAnnounce:
    party: str
    topic: str
    payload: Any

    def to_dict(self) -> dict:
        return {"type": "announce", "party": self.party, "topic": self.topic, "payload": self.payload}

    public = to_dict


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool

    def to_dict(self) -> dict:
        return {"type": "check", "check_id": self.check_id, "passed": self.passed}


@dataclass(frozen=True)
class Abort:
    reason: str

    def to_dict(self) -> dict:
        return {"type": "abort", "reason": self.reason}


@dataclass
class Transcript:
    """Append-only log of one protocol run.

    ``audit`` holds the adversary's private actions. It is kept apart from
    ``events`` so nothing derived from the public view can reach it.
    """

    protocol: str
    seed: int
    params: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    audit: list = field(default_factory=list)
    outcome: dict | None = None
    aborted: bool = field(default=False, init=False)

    @property
    def closed(self) -> bool:
        return self.outcome is not None

    def _append(self, event) -> None:
        if self.closed:
            raise TranscriptError("transcript is closed")
        self.events.append(event)

    def log_send(self, sequence: str, direction: str, labels: Sequence[Label]) -> None:
        if self.aborted:
            raise TranscriptError("quantum send after abort")
        self._append(QuantumSend(sequence, direction, tuple(str(lab) for lab in labels)))

    def log_check(self, check_id: str, passed: bool) -> None:
        self._append(CheckResult(check_id, bool(passed)))

    def log_abort(self, reason: str) -> None:
        self._append(Abort(reason))
        self.aborted = True

    def log_audit(self, entry: dict) -> None:
        if self.closed:
            raise TranscriptError("transcript is closed")
        self.audit.append(entry)

    def close(self, outcome: dict) -> None:
        if self.closed:
            raise TranscriptError("transcript is already closed")
        self.outcome = dict(outcome)

    @property
    def public_view(self) -> list[dict]:
        """What an eavesdropper on the classical channel sees."""
        return [e.public() for e in self.events if isinstance(e, (QuantumSend, ClassicalAnnounce))]

    def public_key(self) -> str:
        return json.dumps(self.public_view, sort_keys=True)

    def announcements(self, topic: str | None = None) -> list[ClassicalAnnounce]:
        return [
            e for e in self.events
            if isinstance(e, ClassicalAnnounce) and (topic is None or e.topic == topic)
        ]

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "seed": self.seed,
            "params": self.params,
            "events": [e.to_dict() for e in self.events],
            "audit": list(self.audit),
            "outcome": self.outcome,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def announce(party: str, topic: str, payload: Any, transcript: Transcript) -> None:
    """Publish ``payload`` on the authenticated public channel."""
    if transcript.aborted:
        raise TranscriptError(f"{party} cannot announce {topic!r}: run was aborted")
    transcript._append(ClassicalAnnounce(party, topic, payload))


@dataclass(frozen=True)
class AdversaryModel:
    """What Eve does to qubits in transit.

    Both resend attacks measure every passing qubit in a uniformly chosen
    Z or X basis and forward a fresh qubit in the observed eigenstate.
    ``passive`` only listens to the classical channel.
    """

    kind: str = "none"

    KINDS = ("none", "intercept_resend", "measure_resend", "passive")

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        if kind not in self.KINDS:
            raise ValueError(f"unknown adversary {self.kind!r}")
        object.__setattr__(self, "kind", kind)

    @property
    def touches_qubits(self) -> bool:
        return self.kind in ("intercept_resend", "measure_resend")

    def choose_basis(self, rng: np.random.Generator):
        return Z if rng.random() < 0.5 else X


NO_ADVERSARY = AdversaryModel("none")


def send_quantum(
    qubits: Sequence[Label],
    state: StateVector | QubitPool,
    adversary: AdversaryModel,
    rng: np.random.Generator,
    transcript: Transcript,
    sequence: str = "",
    direction: str = "",
) -> StateVector | QubitPool:
    """Move ``qubits`` across the quantum channel as one block.

    A ``QubitPool`` is updated in place and returned; a ``StateVector`` input
    yields a new ``StateVector`` over the same labels in the same order.
    """
    qubits = tuple(qubits)
    missing = [q for q in qubits if q not in state]
    if missing:
        raise ValueError(f"unknown label(s) {missing}")
    transcript.log_send(sequence, direction, qubits)
    if not adversary.touches_qubits:
        return state

    pool = state if isinstance(state, QubitPool) else QubitPool([state])
    for q in qubits:
        basis = adversary.choose_basis(rng)
        outcome = pool.measure([q], basis, rng)
        pool.add(prepare_single(outcome.index, q))
        transcript.log_audit(
            {"sequence": sequence, "label": str(q), "basis": basis.kind, "result": outcome.index}
        )
    if isinstance(state, QubitPool):
        return pool
    return pool.to_state(state.labels)


@dataclass
class RunOutcome:
    """Result of one protocol run.

    ``alice_decoded`` is what Alice recovered (Bob's message) and vice versa.
    Both are ``None`` when a security check aborted the run.
    """

    protocol: str
    status: str
    transcript: Transcript
    alice_decoded: str | None = None
    bob_decoded: str | None = None
    aborted_check: str | None = None
    efficiency_inputs: tuple[int, int, int] | None = None
    measurement_kinds: frozenset = frozenset()
    path_probability: float = 1.0

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def finish(
    transcript: Transcript,
    protocol: str,
    pool: QubitPool,
    *,
    alice_decoded: str | None = None,
    bob_decoded: str | None = None,
    aborted_check: str | None = None,
    efficiency_inputs: tuple[int, int, int] | None = None,
    measurement_kinds: frozenset = frozenset(),
) -> RunOutcome:
    status = "aborted" if aborted_check else "completed"
    transcript.close(
        {
            "status": status,
            "aborted_check": aborted_check,
            "alice_decoded": alice_decoded,
            "bob_decoded": bob_decoded,
        }
    )
    return RunOutcome(
        protocol=protocol,
        status=status,
        transcript=transcript,
        alice_decoded=alice_decoded,
        bob_decoded=bob_decoded,
        aborted_check=aborted_check,
        efficiency_inputs=efficiency_inputs,
        measurement_kinds=frozenset(measurement_kinds),
        path_probability=pool.path_probability,
    )
