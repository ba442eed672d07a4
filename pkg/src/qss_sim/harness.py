"""Full secret-sharing sessions: prepare, intercept, measure, announce, sift, check.

Randomness
----------
All randomness derives from ``SessionConfig.seed`` through numpy
``SeedSequence`` spawn keys:

* ``(0,)``       control-key bootstrap (encrypted scheme only)
* ``(1, b)``     round block ``b``, covering rounds ``b*size`` up to
  ``(b+1)*size - 1`` where ``size = block_size(n)``

Inside a block the draws happen in a fixed order: Eve's bases and outcomes,
the legitimate bases, the measurement outcomes party by party, then one
check-selection draw per round. Blocks are independent, so they can run in
any order or in parallel and still produce the same report.
"""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Iterator, Sequence

import numpy as np

from .adversary import EveModel, eve_guess, intercept_batch
from .protocol_rules import (
    Designation,
    ErrorEstimate,
    RoundClass,
    RoundRecord,
    estimate_error_rate,
    make_record,
    reconstruct_secret_bit,
    sift,
)
from .quantum_core import (
    MAX_DENSE_QUBITS,
    MIN_QUBITS,
    Basis,
    format_bases,
    ghz_amplitudes,
    measure_all_batch,
    sample_ghz_outcomes_batch,
)
from .schemes import (
    ConfigError,
    ControlKeySet,
    SchemeConfig,
    SchemeKind,
    bootstrap_control_keys,
    draw_bases_favored,
    draw_bases_symmetric,
    mask_to_bases,
)

SCHEMA_VERSION = 1
BLOCK_SIZE = 4096
# dense blocks hold at most this many amplitudes
_DENSE_BLOCK_AMPS = 1 << 20
MAX_PARTIES = 64
DEFAULT_CHECK_FRACTION = 0.5
# not taken from the protocol description; a conventional QKD-style abort level
DEFAULT_ERROR_THRESHOLD = 0.11
RNG_RULE = "numpy PCG64, SeedSequence(seed, spawn_key=(0,)) for keys, (1, block) per block"


class Verdict(str, Enum):
    CLEAN = "clean"
    COMPROMISED = "compromised"
    INSUFFICIENT_SAMPLES = "insufficient_samples"


class CollusionIncompleteError(ValueError):
    """Not every participant contributed a share."""


@dataclass(frozen=True)
class SessionConfig:
    n: int
    rounds: int
    scheme: SchemeConfig
    eve: EveModel | None = None
    check_fraction: float = DEFAULT_CHECK_FRACTION
    error_threshold: float = DEFAULT_ERROR_THRESHOLD
    seed: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or not MIN_QUBITS <= self.n <= MAX_PARTIES:
            raise ConfigError(f"n must be an integer in [{MIN_QUBITS}, {MAX_PARTIES}]")
        if self.eve is not None:
            if self.n > MAX_DENSE_QUBITS:
                raise ConfigError(f"interception needs the dense simulator, n <= {MAX_DENSE_QUBITS}")
            self.eve.targets(self.n)
        if not isinstance(self.rounds, int) or self.rounds < 1:
            raise ConfigError("rounds must be a positive integer")
        if not 0.0 <= self.check_fraction <= 1.0:
            raise ConfigError("check_fraction must be in [0, 1]")
        if not 0.0 <= self.error_threshold <= 1.0:
            raise ConfigError("error_threshold must be in [0, 1]")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "rounds": self.rounds,
            "scheme": self.scheme.to_dict(),
            "eve": None if self.eve is None else self.eve.to_dict(),
            "check_fraction": self.check_fraction,
            "error_threshold": self.error_threshold,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SessionConfig:
        scheme = d.get("scheme", {"kind": "symmetric"})
        if isinstance(scheme, str):
            scheme = {"kind": scheme}
        eve = d.get("eve")
        if isinstance(eve, str):
            eve = {"kind": eve}
        return cls(
            n=d["n"],
            rounds=d["rounds"],
            scheme=SchemeConfig.from_dict(scheme),
            eve=None if eve is None else EveModel.from_dict(eve),
            check_fraction=d.get("check_fraction", DEFAULT_CHECK_FRACTION),
            error_threshold=d.get("error_threshold", DEFAULT_ERROR_THRESHOLD),
            seed=d.get("seed", 0),
        )


@dataclass(frozen=True)
class ParticipantShare:
    """What party ``party`` (2..n) holds for the key rounds, in key order."""

    party: int
    outcomes: str
    bases: str


def _estimate_dict(est: ErrorEstimate) -> dict[str, Any]:
    return {"samples": est.samples, "errors": est.errors, "rate": est.rate}


@dataclass
class SessionReport:
    config: SessionConfig
    class_counts: dict[str, int]
    designation_counts: dict[str, int]
    valid_fraction: float
    key_fraction: float
    key_bits: str
    key_classes: str
    shares: list[ParticipantShare]
    check: ErrorEstimate
    check_by_y_count: dict[int, ErrorEstimate]
    sifted: ErrorEstimate
    sifted_by_class: dict[str, ErrorEstimate]
    verdict: Verdict
    eve_knowledge_fraction: float | None
    records: list[RoundRecord] = field(default_factory=list, repr=False, compare=False)

    @property
    def check_error_rate(self) -> float:
        return self.check.rate

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.config.seed,
            "rng": RNG_RULE,
            "block_size": block_size(self.config.n),
            "config": self.config.to_dict(),
            "class_counts": self.class_counts,
            "designation_counts": self.designation_counts,
            "valid_fraction": self.valid_fraction,
            "key_fraction": self.key_fraction,
            "check_error_rate": self.check.rate,
            "check": _estimate_dict(self.check),
            "check_by_y_count": {str(m): _estimate_dict(e) for m, e in self.check_by_y_count.items()},
            "sifted_error": _estimate_dict(self.sifted),
            "sifted_error_by_class": {c: _estimate_dict(e) for c, e in self.sifted_by_class.items()},
            "verdict": self.verdict.value,
            "eve_knowledge_fraction": self.eve_knowledge_fraction,
            "key_length": len(self.key_bits),
            "key_bits": self.key_bits,
            "key_classes": self.key_classes,
            "shares": [
                {"party": s.party, "outcomes": s.outcomes, "bases": s.bases} for s in self.shares
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# -- round simulation ---------------------------------------------------------


def block_size(n: int) -> int:
    """Rounds per block: BLOCK_SIZE, shrunk for large dense states to bound memory."""
    if n > MAX_DENSE_QUBITS:
        return BLOCK_SIZE
    return max(1, min(BLOCK_SIZE, _DENSE_BLOCK_AMPS >> n))


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, block)))


def _keys_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))


def _simulate_block(
    config: SessionConfig, key_mask: np.ndarray | None, block: int
) -> dict[str, np.ndarray]:
    n = config.n
    start = block * block_size(n)
    size = min(block_size(n), config.rounds - start)
    rand = _block_rng(config.seed, block)
    out: dict[str, np.ndarray] = {}

    amps = ghz_amplitudes(n, size) if n <= MAX_DENSE_QUBITS else None
    if config.eve is not None:
        amps, out["eve_y"], out["eve_out"] = intercept_batch(amps, n, config.eve, rand)

    scheme = config.scheme
    if scheme.kind is SchemeKind.SYMMETRIC:
        is_y = draw_bases_symmetric(n, rand, size)
    elif scheme.kind is SchemeKind.FAVORED:
        is_y = draw_bases_favored(n, scheme.epsilon, rand, size)
    else:
        is_y = key_mask[np.arange(start, start + size) % len(key_mask)]

    if amps is not None:
        outcomes = measure_all_batch(amps, n, is_y, rand)
    else:
        outcomes = sample_ghz_outcomes_batch(n, is_y, rand)
    out["is_y"] = is_y
    out["outcomes"] = outcomes
    out["check_draw"] = rand.random(size)
    return out


def _simulate_block_star(args: tuple) -> dict[str, np.ndarray]:
    return _simulate_block(*args)


def _designate(config: SessionConfig, round_class: RoundClass, y_count: int, check_draw: float) -> Designation:
    if not round_class.valid:
        return Designation.DISCARDED
    if config.scheme.kind is SchemeKind.FAVORED:
        return Designation.KEY if y_count == 0 else Designation.CHECK
    return Designation.CHECK if check_draw < config.check_fraction else Designation.KEY


def session_keys(config: SessionConfig) -> ControlKeySet:
    """Control keys a session bootstraps for itself from its seed."""
    return bootstrap_control_keys(config.n, config.scheme.key_length, _keys_rng(config.seed))


def run_session(
    config: SessionConfig, *, keys: ControlKeySet | None = None, workers: int = 1
) -> SessionReport:
    """Run ``config.rounds`` rounds and aggregate them into a report.

    The encrypted scheme bootstraps its control keys from the seed unless
    ``keys`` are supplied (key reuse from an earlier session).
    """
    key_mask = None
    if config.scheme.kind is SchemeKind.ENCRYPTED:
        if keys is None:
            keys = session_keys(config)
        elif keys.n != config.n:
            raise ConfigError(f"control keys are for n={keys.n}, session has n={config.n}")
        key_mask = keys.y_mask()
    elif keys is not None:
        raise ConfigError("control keys only apply to the encrypted scheme")

    n_blocks = -(-config.rounds // block_size(config.n))
    jobs = [(config, key_mask, b) for b in range(n_blocks)]
    if workers > 1 and n_blocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_simulate_block_star, jobs))
    else:
        blocks = [_simulate_block_star(j) for j in jobs]

    data = {k: np.concatenate([b[k] for b in blocks]) for k in blocks[0]}
    return _aggregate(config, data)


def _aggregate(config: SessionConfig, data: dict[str, np.ndarray]) -> SessionReport:
    n = config.n
    is_y, outcomes, check_draw = data["is_y"], data["outcomes"], data["check_draw"]
    y_counts = is_y.sum(axis=1)

    records = []
    for rid in range(config.rounds):
        bases = mask_to_bases(is_y[rid])
        record = make_record(rid, bases, outcomes[rid].tolist(), Designation.DISCARDED)
        designation = _designate(config, record.round_class, int(y_counts[rid]), check_draw[rid])
        records.append(
            RoundRecord(rid, record.bases, record.outcomes, record.round_class, designation)
        )

    sifted = sift(records)
    check_records = [r for r in sifted if r.designation is Designation.CHECK]
    key_records = [r for r in sifted if r.designation is Designation.KEY]

    check = estimate_error_rate(check_records)
    by_y: dict[int, list[RoundRecord]] = {}
    for r in check_records:
        by_y.setdefault(int(y_counts[r.round_id]), []).append(r)
    check_by_y = {m: estimate_error_rate(rs) for m, rs in sorted(by_y.items())}
    sifted_by_class = {
        c.value: estimate_error_rate([r for r in sifted if r.round_class is c])
        for c in (RoundClass.TWO_MOD_4, RoundClass.ZERO_MOD_4)
    }

    if check.insufficient_samples:
        verdict = Verdict.INSUFFICIENT_SAMPLES
    elif check.rate > config.error_threshold:
        verdict = Verdict.COMPROMISED
    else:
        verdict = Verdict.CLEAN

    eve_knowledge = None
    if config.eve is not None and config.eve.intercepts_all and sifted:
        eve_out = data["eve_out"]
        hits = sum(
            eve_guess(eve_out[r.round_id].tolist(), r.round_class) == r.alice_outcome for r in sifted
        )
        eve_knowledge = hits / len(sifted)

    class_counts = {c.value: 0 for c in RoundClass}
    designation_counts = {d.value: 0 for d in Designation}
    for r in records:
        class_counts[r.round_class.value] += 1
        designation_counts[r.designation.value] += 1

    shares = [
        ParticipantShare(
            party=p + 1,
            outcomes="".join(str(r.outcomes[p]) for r in key_records),
            bases=format_bases(r.bases[p] for r in key_records),
        )
        for p in range(1, n)
    ]
    return SessionReport(
        config=config,
        class_counts=class_counts,
        designation_counts=designation_counts,
        valid_fraction=len(sifted) / config.rounds,
        key_fraction=len(key_records) / config.rounds,
        key_bits="".join(str(r.alice_outcome) for r in key_records),
        key_classes="".join("2" if r.round_class is RoundClass.TWO_MOD_4 else "0" for r in key_records),
        shares=shares,
        check=check,
        check_by_y_count=check_by_y,
        sifted=estimate_error_rate(sifted),
        sifted_by_class=sifted_by_class,
        verdict=verdict,
        eve_knowledge_fraction=eve_knowledge,
        records=records,
    )


# -- reconstruction -----------------------------------------------------------


def reconstruct_shared_secret(report: SessionReport, participant_shares: Sequence[ParticipantShare]) -> str:
    """Key bits recovered jointly by all n-1 participants.

    Refuses to run unless every participant 2..n contributed; a partial
    coalition has no information about Alice's bits.
    """
    n = report.config.n
    by_party = {s.party: s for s in participant_shares}
    missing = sorted(set(range(2, n + 1)) - set(by_party))
    if missing:
        raise CollusionIncompleteError(f"missing shares from parties {missing}")
    length = len(report.key_classes)
    if any(len(s.outcomes) != length for s in by_party.values()):
        raise ValueError("share length does not match the number of key rounds")
    classes = {"2": RoundClass.TWO_MOD_4, "0": RoundClass.ZERO_MOD_4}
    bits = []
    for j, c in enumerate(report.key_classes):
        outcomes = [int(by_party[p].outcomes[j]) for p in range(2, n + 1)]
        bits.append(str(reconstruct_secret_bit(outcomes, classes[c])))
    return "".join(bits)


# -- classical channel ---------------------------------------------------------


@dataclass(frozen=True)
class BasisReveal:
    round_id: int
    party: int
    basis: Basis


@dataclass(frozen=True)
class ClassAnnouncement:
    round_id: int
    round_class: RoundClass


@dataclass(frozen=True)
class OutcomeDisclosure:
    round_id: int
    party: int
    outcome: int


Message = BasisReveal | ClassAnnouncement | OutcomeDisclosure


def announcements(report: SessionReport) -> Iterator[Message]:
    """Replay the public classical traffic of a session.

    Symmetric: every party reveals its bases, Alice announces each round's
    class, check rounds are disclosed. Favored: bases are public and rounds
    containing any y have their outcomes published. Encrypted: bases stay
    secret; only classes and check-round outcomes go out.
    """
    kind = report.config.scheme.kind
    for r in report.records:
        if kind is not SchemeKind.ENCRYPTED:
            for party, basis in enumerate(r.bases, start=1):
                yield BasisReveal(r.round_id, party, basis)
        yield ClassAnnouncement(r.round_id, r.round_class)
        disclose = r.designation is Designation.CHECK
        if kind is SchemeKind.FAVORED:
            disclose = Basis.Y in r.bases
        if disclose:
            for party, outcome in enumerate(r.outcomes, start=1):
                yield OutcomeDisclosure(r.round_id, party, outcome)


def audit_transcript(messages: Iterable[Message], records: Sequence[RoundRecord]) -> list[str]:
    """Problems found in a transcript; an empty list means it is clean.

    Class announcements may carry only the RoundClass (never the y-count),
    and no outcome of a key round may be disclosed.
    """
    problems = []
    designations = {r.round_id: r.designation for r in records}
    for msg in messages:
        if isinstance(msg, ClassAnnouncement):
            if set(vars(msg)) != {"round_id", "round_class"} or not isinstance(msg.round_class, RoundClass):
                problems.append(f"round {msg.round_id}: class announcement carries extra data")
        elif isinstance(msg, OutcomeDisclosure):
            if designations.get(msg.round_id) is Designation.KEY:
                problems.append(f"round {msg.round_id}: key-round outcome of party {msg.party} disclosed")
    return problems


# -- files ---------------------------------------------------------------------


def write_round_log(records: Iterable[RoundRecord], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round_id", "bases", "outcomes", "class", "designation"])
        for r in records:
            writer.writerow(
                [
                    r.round_id,
                    format_bases(r.bases),
                    "".join(map(str, r.outcomes)),
                    r.round_class.value,
                    r.designation.value,
                ]
            )


def read_round_log(path: str | os.PathLike) -> list[RoundRecord]:
    with open(path, newline="") as fh:
        return [
            RoundRecord(
                int(row["round_id"]),
                tuple(Basis(c) for c in row["bases"]),
                tuple(int(c) for c in row["outcomes"]),
                RoundClass(row["class"]),
                Designation(row["designation"]),
            )
            for row in csv.DictReader(fh)
        ]
