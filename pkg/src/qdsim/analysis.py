"""Leakage audit, attack statistics and efficiency accounting.

Leakage is computed by exact enumeration: every hidden preparation choice and
every pair of secret messages is pushed through the simulator, and the joint
distribution of (secrets, public observation) is accumulated with rational
weights.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Mapping

import numpy as np
from scipy.stats import binomtest

from .channel import AdversaryModel, Transcript, send_quantum
from .protocol_bell import (
    BellRunParams,
    encode_bit,
    run_bell,
    security_check_1,
    security_check_2,
    transmit,
)
from .protocol_ghz import run_ghz
from .protocol_w import PAULI_BIT_CODE, bob_encode_w, run_w
from .qcore import (
    BELL,
    BELL_KINDS,
    CNOT,
    GHZ_KINDS,
    RNG_PURPOSES,
    X,
    Z,
    ZZ,
    ParticleLabel,
    QubitPool,
    apply_gate,
    measure,
    outcome_probabilities,
    prepare_bell,
    prepare_ghz4,
    prepare_single,
    prepare_w,
)

PROTOCOLS = ("bell", "w", "ghz")
TWO_BITS = ("00", "01", "10", "11")

Joint = Mapping[tuple[Hashable, Hashable], Fraction]


def _exact(p: float) -> Fraction:
    frac = Fraction(p).limit_denominator(1 << 20)
    if abs(float(frac) - p) > 1e-9:
        raise ValueError(f"probability {p} has no small rational form")
    return frac


def _check_protocol(protocol: str) -> str:
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}; choose from {PROTOCOLS}")
    return protocol


# ---------------------------------------------------------------------------
# Information measures on exact joint tables


def shannon_entropy(dist: Mapping[Hashable, Fraction]) -> float:
    total = sum(dist.values())
    return -sum(float(p / total) * math.log2(p / total) for p in dist.values() if p > 0)


def marginals(joint: Joint) -> tuple[dict, dict]:
    secrets, obs = defaultdict(Fraction), defaultdict(Fraction)
    for (s, o), p in joint.items():
        secrets[s] += p
        obs[o] += p
    return dict(secrets), dict(obs)


def posterior(joint: Joint, observation: Hashable) -> dict:
    """P(secret | observation), normalized."""
    hits = {s: p for (s, o), p in joint.items() if o == observation and p > 0}
    total = sum(hits.values())
    return {s: p / total for s, p in hits.items()}


def conditional_entropy(joint: Joint) -> float:
    """H(secrets | observation) in bits."""
    _, obs = marginals(joint)
    return sum(float(p_o) * shannon_entropy(posterior(joint, o)) for o, p_o in obs.items())


def mutual_information_of(joint: Joint) -> float:
    secrets, obs = marginals(joint)
    mi = 0.0
    for (s, o), p in joint.items():
        if p > 0:
            mi += float(p) * math.log2(p / (secrets[s] * obs[o]))
    return max(mi, 0.0)


# ---------------------------------------------------------------------------
# One announcement unit per protocol


def bell_unit_joint() -> dict:
    """(alice bit, bob bit) against one announced particle (origin, result).

    Hidden: Alice's Bell state. The origin a/b is public once Bob has told
    Alice the layout of sequence C.
    """
    joint = defaultdict(Fraction)
    for origin, kind in itertools.product("ab", BELL_KINDS):
        basis = X if origin == "a" else Z
        pair = apply_gate(prepare_bell(kind, ("a", "b")), CNOT, ["a", "b"])
        for start, p_start in outcome_probabilities(pair, [origin], basis).items():
            if p_start == 0:
                continue
            for i, j in itertools.product((0, 1), repeat=2):
                qubit = encode_bit(encode_bit(prepare_single(start, "q"), j), i)
                for seen, p_seen in outcome_probabilities(qubit, ["q"], basis).items():
                    w = Fraction(1, 2) * Fraction(1, 4) * Fraction(1, 4) * _exact(p_start) * _exact(p_seen)
                    if w:
                        joint[(f"{i}{j}", (origin, seen))] += w
    return dict(joint)


def w_unit_joint() -> dict:
    """(alice two-bit, bob two-bit) against the announced Bell result."""
    joint = defaultdict(Fraction)
    labels = ("a", "b", "c")
    for alice, bob in itertools.product(TWO_BITS, repeat=2):
        for branch in "01":
            pool = QubitPool([prepare_w(labels)])
            try:
                bob_encode_w(bob, pool, labels, None, force_branch=branch)
            except ValueError:
                continue  # branch impossible
            p_branch = _exact(pool.path_probability)
            pool.apply(PAULI_BIT_CODE[alice], ["b"])
            for seen, p in outcome_probabilities(pool.to_state(["b", "c"]), ["b", "c"], BELL).items():
                w = Fraction(1, 16) * p_branch * _exact(p)
                if w:
                    joint[((alice, bob), seen)] += w
    return dict(joint)


def ghz_unit_joint() -> dict:
    """(alice two-bit, bob two-bit) against the announced Bell result."""
    joint = defaultdict(Fraction)
    labels = ("a", "b", "c", "d")
    for kind in GHZ_KINDS:
        split = apply_gate(apply_gate(prepare_ghz4(kind, labels), CNOT, ["b", "c"]), CNOT, ["b", "d"])
        for bits, p_cd in outcome_probabilities(split, ["c", "d"], ZZ).items():
            if _exact(p_cd) == 0:
                continue
            pair = measure(split, ["c", "d"], ZZ, None, force=bits).collapsed
            for alice, bob in itertools.product(TWO_BITS, repeat=2):
                state = apply_gate(pair, PAULI_BIT_CODE[bob], ["b"])
                state = apply_gate(state, PAULI_BIT_CODE[alice], ["a"])
                for seen, p in outcome_probabilities(state, ["a", "b"], BELL).items():
                    w = Fraction(1, 4) * Fraction(1, 16) * _exact(p_cd) * _exact(p)
                    if w:
                        joint[((alice, bob), seen)] += w
    return dict(joint)


UNIT_JOINTS: dict[str, Callable[[], dict]] = {
    "bell": bell_unit_joint,
    "w": w_unit_joint,
    "ghz": ghz_unit_joint,
}


# ---------------------------------------------------------------------------
# Whole-run enumeration


def _bell_runs(leaky: bool):
    for kind, order in itertools.product(BELL_KINDS, ((0, 1), (1, 0))):
        for alice, bob in itertools.product(TWO_BITS, repeat=2):
            params = BellRunParams(
                n=1, delta1=0, delta2=0, delta3=0,
                adversary=AdversaryModel("passive"),
                bell_states=(kind,), c_order=order, leak_initial_states=leaky,
            )
            yield Fraction(1, 4) * Fraction(1, 2) * Fraction(1, 16), (alice, bob), run_bell(alice, bob, params)


def _w_runs(leaky: bool):
    for alice, bob in itertools.product(TWO_BITS, repeat=2):
        for branch in "01":
            yield Fraction(1, 16), (alice, bob), run_w(alice, bob, adversary=AdversaryModel("passive"), branch=branch)


def _ghz_runs(leaky: bool):
    for kind in GHZ_KINDS:
        for alice, bob in itertools.product(TWO_BITS, repeat=2):
            run = run_ghz(alice, bob, adversary=AdversaryModel("passive"), ghz_kind=kind)
            yield Fraction(1, 4) * Fraction(1, 16), (alice, bob), run


_RUNS = {"bell": _bell_runs, "w": _w_runs, "ghz": _ghz_runs}


def whole_run_joint(protocol: str, leaky: bool = False) -> dict:
    """Joint law of (messages, public view) over every hidden choice.

    Forced choices carry their prior weight and the run's path probability.
    Every unforced measurement in a passive run is deterministic, which the
    total-mass check below confirms.
    """
    _check_protocol(protocol)
    if leaky and protocol != "bell":
        raise ValueError("the leaky control variant exists for the bell protocol only")
    joint = defaultdict(Fraction)
    for prior, secrets, run in _RUNS[protocol](leaky):
        if not run.completed:
            raise RuntimeError(f"passive {protocol} run aborted")
        joint[(secrets, run.transcript.public_key())] += prior * _exact(run.path_probability)
    total = sum(joint.values())
    if total != 1:
        raise RuntimeError(f"enumeration covers probability {total}, not 1")
    return dict(joint)


def mutual_information(protocol: str, leaky: bool = False) -> float:
    """Exact I(messages; public view) in bits, uniform message priors."""
    return mutual_information_of(whole_run_joint(protocol, leaky))


# ---------------------------------------------------------------------------
# Reports


@dataclass
class LeakageReport:
    protocol: str
    entropy: float
    prior_entropy: float
    unit_mutual_information: float
    mutual_information: float
    consistent_assignments: int
    per_announcement: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _observations(protocol: str, transcript: Transcript) -> list:
    view = transcript.public_view
    by_topic = {e["topic"]: e["payload"] for e in view if e["type"] == "announce"}
    if protocol == "bell":
        origins = [label[0] for label in by_topic["c_positions"]]
        return list(zip(origins, by_topic["results"]))
    return [by_topic["bell_result"]]


def eve_entropy(protocol: str, transcript: Transcript | None = None) -> LeakageReport:
    """Eve's uncertainty about the secrets behind one announcement.

    Without a transcript the entropy is averaged over announcements; with one,
    it is evaluated at each announcement that transcript actually contains.
    """
    _check_protocol(protocol)
    if transcript is not None:
        if transcript.protocol != protocol:
            raise ValueError(f"transcript is from {transcript.protocol!r}, not {protocol!r}")
        if transcript.aborted or not transcript.closed:
            raise ValueError("leakage is only defined for completed runs")
    joint = UNIT_JOINTS[protocol]()
    secrets, obs = marginals(joint)
    counts = {o: len(posterior(joint, o)) for o in obs}
    per = []
    if transcript is not None:
        for o in _observations(protocol, transcript):
            key = tuple(o) if isinstance(o, list) else o
            per.append(
                {
                    "observation": list(key) if isinstance(key, tuple) else key,
                    "entropy": shannon_entropy(posterior(joint, key)),
                    "consistent_assignments": counts[key],
                }
            )
        entropy = sum(p["entropy"] for p in per) / len(per)
    else:
        entropy = conditional_entropy(joint)
    return LeakageReport(
        protocol=protocol,
        entropy=entropy,
        prior_entropy=shannon_entropy(secrets),
        unit_mutual_information=mutual_information_of(joint),
        mutual_information=mutual_information(protocol),
        consistent_assignments=min(counts.values()),
        per_announcement=per,
    )


@dataclass
class EfficiencyReport:
    protocol: str
    b_s: int
    q_t: int
    b_t: int

    @property
    def eta(self) -> float:
        return self.b_s / (self.q_t + self.b_t)

    def to_dict(self) -> dict:
        return {**asdict(self), "eta": self.eta}


def _canonical_run(protocol: str):
    if protocol == "bell":
        return run_bell("10", "01", BellRunParams(n=1, delta1=0, delta2=0, delta3=0))
    if protocol == "w":
        return run_w("10", "01")
    return run_ghz("01", "00")


def cabello_efficiency(protocol: str) -> EfficiencyReport:
    """Secret bits over (qubits + classical bits), check resources excluded."""
    run = _canonical_run(_check_protocol(protocol))
    return EfficiencyReport(protocol, *run.efficiency_inputs)


RESOURCES = {"bell": "Bell states", "w": "W states", "ghz": "four-particle GHZ states"}

LITERATURE = [
    ("prior-1 (2009)", "Bell states", "Bell-basis measurements", 2 / 3),
    ("prior-2 (2010)", "single particles", "single-particle measurements", 2 / 3),
    ("prior-3 (2010)", "Bell states and single particles",
     "single-particle measurements and Bell-basis measurements", 0.75),
    ("prior-4 (2010)", "Bell states", "Bell-basis measurements", 2 / 3),
    ("prior-5 (2013)", "GHZ states", "GHZ-basis measurements", 2 / 3),
    ("prior-6 (2014)", "Bell states", "Bell-basis measurements", 2 / 3),
    ("prior-7 (2014)", "Nearly single particles", "single-particle measurements", 1.0),
]


def _measurement_text(kinds) -> str:
    parts = []
    if kinds & {"Z", "X", "ZZ"}:
        parts.append("single-particle measurements")
    if "BELL" in kinds:
        parts.append("Bell-basis measurements")
    return " and ".join(parts)


def table1_row(protocol: str) -> dict:
    run = _canonical_run(_check_protocol(protocol))
    eff = EfficiencyReport(protocol, *run.efficiency_inputs)
    return {
        "protocol": protocol,
        "initial_resource": RESOURCES[protocol],
        "measurements": _measurement_text(run.measurement_kinds),
        "efficiency": eff.eta,
        "source": "simulated",
    }


def table1() -> list[dict]:
    rows = [
        {"protocol": name, "initial_resource": res, "measurements": meas,
         "efficiency": eta, "source": "literature"}
        for name, res, meas, eta in LITERATURE
    ]
    # the last literature entry is quoted as "nearly 100%"
    rows[-1]["efficiency_note"] = "nearly"
    return rows + [table1_row(p) for p in PROTOCOLS]


def render_table1(rows: list[dict] | None = None) -> str:
    rows = table1() if rows is None else rows
    header = ("protocol", "initial resource", "quantum measurement", "efficiency", "source")
    body = [
        (
            r["protocol"],
            r["initial_resource"],
            r["measurements"],
            ("~" if r.get("efficiency_note") else "") + f"{100 * r['efficiency']:.1f}%",
            r["source"],
        )
        for r in rows
    ]
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in [header, *body]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Attack statistics


@dataclass
class Rate:
    hits: int
    trials: int

    @property
    def rate(self) -> float:
        return self.hits / self.trials

    def sigma(self, p: float | None = None) -> float:
        """Binomial standard error, at ``p`` if given."""
        p = self.rate if p is None else p
        return math.sqrt(p * (1 - p) / self.trials)

    def within(self, expected: float, k: float = 3.0) -> bool:
        return abs(self.rate - expected) <= k * self.sigma(expected) + 1e-15

    def ci(self, level: float = 0.95) -> tuple[float, float]:
        low, high = binomtest(self.hits, self.trials).proportion_ci(level, method="wilson")
        return float(low), float(high)

    def __add__(self, other: "Rate") -> "Rate":
        return Rate(self.hits + other.hits, self.trials + other.trials)

    def to_dict(self) -> dict:
        low, high = self.ci()
        return {"hits": self.hits, "trials": self.trials, "rate": self.rate,
                "ci95": [low, high], "sigma": self.sigma()}


def _shared(rng) -> dict:
    return {name: rng for name in RNG_PURPOSES}


def _scratch() -> Transcript:
    return Transcript("unit", 0)


def _decoy_trial(rng, adversary: AdversaryModel) -> bool:
    passed = transmit(QubitPool(), [], "decoy", "bob", "alice", adversary, 1, _shared(rng), _scratch(), "decoy")
    return not passed


def _check1_trial(rng, adversary: AdversaryModel) -> bool:
    kind = BELL_KINDS[int(rng.integers(4))]
    a, b = ParticleLabel(0, "a", "check"), ParticleLabel(0, "b", "check")
    pool = QubitPool([prepare_bell(kind, (a, b))])
    transcript = _scratch()
    send_quantum([a], pool, adversary, rng, transcript, "A", "alice->bob")
    return not security_check_1(pool, [(0, a, b, kind)], transcript, rng, rng)


def _check2_trial(rng, adversary: AdversaryModel) -> bool:
    kind = BELL_KINDS[int(rng.integers(4))]
    a, b = ParticleLabel(0, "a", "check"), ParticleLabel(0, "b", "check")
    pool = QubitPool([prepare_bell(kind, (a, b))])
    transcript = _scratch()
    send_quantum([b], pool, adversary, rng, transcript, "B", "alice->bob")
    return not security_check_2(pool, [(0, a, b, kind)], transcript, rng)


def _random_bits(rng, n: int) -> str:
    return "".join(str(int(x)) for x in rng.integers(2, size=n))


def _run_trial(rng, adversary: AdversaryModel, protocol: str, run_params: dict) -> bool:
    seed = int(rng.integers(2**63))
    if protocol == "bell":
        params = BellRunParams(**{**run_params, "seed": seed, "adversary": adversary})
        run = run_bell(_random_bits(rng, 2 * params.n), _random_bits(rng, 2 * params.n), params)
    elif protocol == "w":
        run = run_w(_random_bits(rng, 2), _random_bits(rng, 2), seed, adversary, **run_params)
    else:
        run = run_ghz(_random_bits(rng, 2), _random_bits(rng, 2), seed, adversary, **run_params)
    return not run.completed


UNIT_TRIALS = {"decoy": _decoy_trial, "check1": _check1_trial, "check2": _check2_trial}
UNITS = {"bell": ("decoy", "check1", "check2"), "w": ("decoy",), "ghz": ("decoy",)}
DEFAULT_RUN_PARAMS = {
    "bell": {"n": 4, "delta1": 4, "delta2": 4, "delta3": 4},
    "w": {"decoys": 4},
    "ghz": {"decoys": 4},
}


def _chunk(job) -> int:
    """Count detections in one chunk; module-level so worker processes can run it."""
    kind, seed_seq, count, adversary_kind, protocol, run_params = job
    rng = np.random.default_rng(seed_seq)
    adversary = AdversaryModel(adversary_kind)
    if kind == "run":
        return sum(_run_trial(rng, adversary, protocol, run_params) for _ in range(count))
    trial = UNIT_TRIALS[kind]
    return sum(trial(rng, adversary) for _ in range(count))


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (i < extra) for i in range(parts)]


@dataclass
class DetectionStats:
    protocol: str
    adversary: str
    seed: int
    units: dict[str, Rate]
    abort: Rate
    run_params: dict

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "adversary": self.adversary,
            "seed": self.seed,
            "units": {k: v.to_dict() for k, v in self.units.items()},
            "abort": self.abort.to_dict(),
            "run_params": self.run_params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def detection_stats(
    protocol: str,
    adversary: AdversaryModel | str,
    trials: int,
    seed: int = 0,
    *,
    units: tuple[str, ...] | None = None,
    run_trials: int | None = None,
    run_params: dict | None = None,
    chunks: int = 8,
    workers: int = 1,
) -> DetectionStats:
    """Monte-Carlo detection rates per checking unit and per full run.

    Trials are split into ``chunks`` with independent seed sub-streams and the
    counts are summed, so the result does not depend on ``workers``.
    ``run_trials`` (default ``min(trials, 1000)``) sets the number of complete
    protocol runs behind the abort rate.
    """
    _check_protocol(protocol)
    if trials < 1:
        raise ValueError("trials must be positive")
    adversary = AdversaryModel(adversary) if isinstance(adversary, str) else adversary
    units = UNITS[protocol] if units is None else tuple(units)
    run_trials = min(trials, 1000) if run_trials is None else run_trials
    if run_trials < 1:
        raise ValueError("run_trials must be positive")
    run_params = dict(DEFAULT_RUN_PARAMS[protocol] if run_params is None else run_params)

    plan = [(u, trials) for u in units] + [("run", run_trials)]
    root = np.random.SeedSequence(int(seed) & (2**64 - 1))
    jobs, owners = [], []
    for (kind, count), child in zip(plan, root.spawn(len(plan))):
        parts = _split(count, max(1, min(chunks, count)))
        for part, sub in zip(parts, child.spawn(len(parts))):
            jobs.append((kind, sub, part, adversary.kind, protocol, run_params))
            owners.append((kind, part))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            hits = list(pool.map(_chunk, jobs))
    else:
        hits = [_chunk(job) for job in jobs]

    totals: dict[str, Rate] = {}
    for (kind, part), h in zip(owners, hits):
        totals[kind] = totals.get(kind, Rate(0, 0)) + Rate(h, part)
    abort = totals.pop("run")
    return DetectionStats(protocol, adversary.kind, seed, totals, abort, run_params)
