"""Command-line front end.

    qdsim run     --protocol bell --alice-bits 10 --bob-bits 01 --n 1 --seed 7
    qdsim audit   --protocol w
    qdsim attack  --protocol bell --adversary measure-resend --trials 100000 --seed 9
    qdsim table1

Exit status: 0 on success, 1 on usage or I/O errors, 2 when a run aborts on a
failed security check.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis
from .channel import AdversaryModel
from .protocol_bell import BellRunParams, run_bell
from .protocol_ghz import run_ghz
from .protocol_w import run_w
from .qcore import rng_streams

EXIT_OK, EXIT_USAGE, EXIT_ABORT = 0, 1, 2

ADVERSARIES = ("none", "intercept-resend", "measure-resend", "passive")
BELL_DEFAULTS = {"n": 4, "delta1": 4, "delta2": 4, "delta3": 4}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text} is negative")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qdsim", description="Leakage-free quantum dialogue simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, output_default):
        p.add_argument("--protocol", choices=analysis.PROTOCOLS, default="bell")
        p.add_argument("--seed", type=int, default=None,
                       help="defaults to $QDSIM_SEED, then 0")
        p.add_argument("--output", type=Path, default=output_default)

    def sizes(p, decoy_default):
        p.add_argument("--n", type=_positive, default=None, help="message pairs (bell, default 4)")
        p.add_argument("--delta1", type=_non_negative, default=None, help="bell check-1 pairs (default 4)")
        p.add_argument("--delta2", type=_non_negative, default=None, help="bell check-2 pairs (default 4)")
        p.add_argument("--delta3", type=_non_negative, default=None,
                       help=f"decoy photons: bell sequence C' (default 4); w/ghz per send (default {decoy_default})")
        p.add_argument("--adversary", choices=ADVERSARIES, default="none")

    run = sub.add_parser("run", help="execute one protocol run and write its transcript")
    common(run, output_default=Path("transcript.json"))
    sizes(run, 0)
    run.add_argument("--alice-bits", default=None, help="big-endian bit string; random if omitted")
    run.add_argument("--bob-bits", default=None, help="big-endian bit string; random if omitted")

    audit = sub.add_parser("audit", help="exact leakage audit")
    common(audit, output_default=Path("audit.json"))

    attack = sub.add_parser("attack", help="Monte-Carlo detection statistics")
    common(attack, output_default=Path("attack.json"))
    sizes(attack, 4)
    attack.add_argument("--trials", type=_positive, default=10_000)

    table = sub.add_parser("table1", help="efficiency comparison table")
    table.add_argument("--output", type=Path, default=None, help="also write the rows as JSON")
    return parser


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QDSIM_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QDSIM_SEED={env!r} is not an integer") from None


def _bits(given: str | None, length: int, who: str, rng) -> str:
    if given is None:
        return "".join(str(int(b)) for b in rng.integers(2, size=length))
    if len(given) != length or set(given) - {"0", "1"}:
        raise UsageError(f"--{who}-bits must be {length} bits of 0/1, got {given!r}")
    return given


def _bell_sizes(args) -> dict:
    return {k: BELL_DEFAULTS[k] if getattr(args, k) is None else getattr(args, k) for k in BELL_DEFAULTS}


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def cmd_run(args) -> int:
    seed = _seed(args)
    adversary = AdversaryModel(args.adversary)
    message_rng = rng_streams(seed)["message"]
    if args.protocol == "bell":
        sizes = _bell_sizes(args)
        length = 2 * sizes["n"]
    else:
        if args.n is not None or args.delta1 is not None or args.delta2 is not None:
            raise UsageError("--n, --delta1 and --delta2 apply to the bell protocol only")
        length = 2
    alice = _bits(args.alice_bits, length, "alice", message_rng)
    bob = _bits(args.bob_bits, length, "bob", message_rng)

    if args.protocol == "bell":
        outcome = run_bell(alice, bob, BellRunParams(seed=seed, adversary=adversary, **sizes))
    else:
        runner = run_w if args.protocol == "w" else run_ghz
        outcome = runner(alice, bob, seed, adversary, decoys=args.delta3 or 0)

    _write(args.output, outcome.transcript.to_json())
    if outcome.completed:
        print(f"status=completed alice_decoded={outcome.alice_decoded} bob_decoded={outcome.bob_decoded}")
        print(f"transcript={args.output}")
        return EXIT_OK
    print(f"status=aborted check={outcome.aborted_check}")
    print(f"transcript={args.output}")
    return EXIT_ABORT


def cmd_audit(args) -> int:
    report = analysis.eve_entropy(args.protocol)
    _write(args.output, report.to_json())
    print(
        f"protocol={report.protocol} entropy={report.entropy:.3f} bits "
        f"prior={report.prior_entropy:.3f} bits mutual_information={report.mutual_information:.3f} bits "
        f"consistent_assignments={report.consistent_assignments}"
    )
    return EXIT_OK


def cmd_attack(args) -> int:
    seed = _seed(args)
    if args.protocol == "bell":
        run_params = _bell_sizes(args)
    else:
        run_params = {"decoys": 4 if args.delta3 is None else args.delta3}
    stats = analysis.detection_stats(
        args.protocol, args.adversary, args.trials, seed, run_params=run_params
    )
    _write(args.output, stats.to_json())
    for name, rate in stats.units.items():
        print(f"{name}: rate={rate.rate:.4f} ({rate.hits}/{rate.trials})")
    print(f"abort: rate={stats.abort.rate:.4f} ({stats.abort.hits}/{stats.abort.trials})")
    return EXIT_OK


def cmd_table1(args) -> int:
    rows = analysis.table1()
    if args.output is not None:
        _write(args.output, json.dumps(rows, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(analysis.render_table1(rows))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "audit": cmd_audit, "attack": cmd_attack, "table1": cmd_table1}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qdsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
