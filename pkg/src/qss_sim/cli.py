"""Command-line front end: ``qss run | verify | bootstrap | predict``.

Exit status: 0 on success (a compromised verdict is still a successful
simulation), 1 when verification or I/O fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

import numpy as np

from .adversary import EveKind, EveModel, predict_error_rate
from .harness import SessionConfig, run_session, write_round_log
from .quantum_core import MAX_DENSE_QUBITS, format_bases, oracle_mismatches
from .schemes import ConfigError, ControlKeySet, SchemeKind, bootstrap_control_keys

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
SEED_ENV = "QSS_SEED"


def parse_range(text: str) -> list[int]:
    """``"2..8"`` -> [2, ..., 8]; ``"5"`` -> [5]."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO..HI, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return list(range(lo, hi + 1))


def _eve_choice(text: str) -> str:
    choices = ["none", *(k.value for k in EveKind)]
    if text not in choices:
        raise argparse.ArgumentTypeError(f"choose from {', '.join(choices)}")
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a session and write a JSON report")
    run.add_argument("--config", help="JSON file with SessionConfig fields")
    run.add_argument("--scheme", choices=[k.value for k in SchemeKind])
    run.add_argument("--parties", type=int)
    run.add_argument("--rounds", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--epsilon", type=float, help="y probability for the favored scheme")
    run.add_argument("--key-length", type=int, help="control key length for the encrypted scheme")
    run.add_argument("--keys", help="reuse a control key file instead of bootstrapping")
    run.add_argument("--eve", type=_eve_choice)
    run.add_argument("--eve-target", type=int, help="party number 2..n for single-random")
    run.add_argument("--check-fraction", type=float)
    run.add_argument("--threshold", type=float, help="error rate above which the session is rejected")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--output", "-o", help="report path (default: stdout)")
    run.add_argument("--log", help="write the per-round CSV log here")

    verify = sub.add_parser("verify", help="check the closed-form oracle against the dense simulator")
    verify.add_argument("--parties", type=parse_range, default=parse_range("2..8"))

    boot = sub.add_parser("bootstrap", help="generate control keys from symmetric rounds")
    boot.add_argument("--parties", type=int, required=True)
    boot.add_argument("--key-length", type=int, default=1000)
    boot.add_argument("--seed", type=int)
    boot.add_argument("--check-fraction", type=float, default=0.0)
    boot.add_argument("--output", "-o", required=True)

    pred = sub.add_parser("predict", help="closed-form error rate for an eavesdropper")
    pred.add_argument("--parties", type=int, required=True)
    pred.add_argument("--eve", type=_eve_choice, required=True)
    pred.add_argument("--eve-target", type=int)
    return parser


def _default_seed(flag: int | None) -> int | None:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    return int(env) if env else None


def session_config_from_args(args: argparse.Namespace) -> SessionConfig:
    """Merge defaults, the optional config file and flags (flags win)."""
    doc: dict = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    scheme = doc.get("scheme", {"kind": "symmetric"})
    scheme = {"kind": scheme} if isinstance(scheme, str) else dict(scheme)
    if args.scheme is not None and args.scheme != scheme.get("kind"):
        scheme = {"kind": args.scheme}
    if args.epsilon is not None:
        scheme["epsilon"] = args.epsilon
    if args.key_length is not None:
        scheme["key_length"] = args.key_length
    doc["scheme"] = scheme

    if args.eve is not None:
        doc["eve"] = None if args.eve == "none" else {"kind": args.eve}
    if args.eve_target is not None:
        if not doc.get("eve"):
            raise ConfigError("--eve-target needs an eavesdropper")
        eve = doc["eve"] if isinstance(doc["eve"], dict) else {"kind": doc["eve"]}
        doc["eve"] = {**eve, "target_party": args.eve_target}

    for key, value in (
        ("n", args.parties),
        ("rounds", args.rounds),
        ("check_fraction", args.check_fraction),
        ("error_threshold", args.threshold),
    ):
        if value is not None:
            doc[key] = value
    seed = _default_seed(args.seed)
    if seed is not None:
        doc["seed"] = seed
    missing = [k for k in ("n", "rounds") if k not in doc]
    if missing:
        raise ConfigError(f"missing {', '.join(missing)} (use --parties/--rounds or --config)")
    return SessionConfig.from_dict(doc)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args: argparse.Namespace) -> int:
    config = session_config_from_args(args)
    keys = None
    if args.keys:
        with open(args.keys) as fh:
            keys = ControlKeySet.from_json(fh.read())
    report = run_session(config, keys=keys, workers=args.workers)
    _emit(report.to_json(), args.output)
    if args.log:
        write_round_log(report.records, args.log)
    if args.output:
        print(f"verdict={report.verdict.value} valid_fraction={report.valid_fraction:.6f} "
              f"check_error_rate={report.check_error_rate:.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    status = EXIT_OK
    for n in args.parties:
        if not 2 <= n <= min(MAX_DENSE_QUBITS, 12):
            raise ConfigError(f"verify supports 2 <= n <= 12, got {n}")
        bad = oracle_mismatches(n)
        if bad:
            status = EXIT_FAILURE
            n_, bases, outcome, err = bad[0]
            print(f"n={n}: FAIL ({len(bad)} mismatches), first at bases={format_bases(bases)} "
                  f"outcome={''.join(map(str, outcome))} |diff|={err:.3e}")
        else:
            print(f"n={n}: pass ({2 ** n} basis vectors x {2 ** n} outcomes)")
    return status


def cmd_bootstrap(args: argparse.Namespace) -> int:
    seed = _default_seed(args.seed)
    keys = bootstrap_control_keys(
        args.parties, args.key_length, np.random.default_rng(seed), check_fraction=args.check_fraction
    )
    with open(args.output, "w") as fh:
        fh.write(keys.to_json())
    print(f"wrote {keys.key_length}-entry keys for n={keys.n} "
          f"({keys.bootstrap_rounds} rounds consumed) to {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    if args.eve == "none":
        print(0.0)
        return EXIT_OK
    model = EveModel(EveKind(args.eve), args.eve_target)
    model.targets(args.parties)
    print(predict_error_rate(args.parties, model))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "bootstrap": cmd_bootstrap, "predict": cmd_predict}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"qss {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"qss {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
