"""Basis-selection strategies: symmetric HBB, favored basis, control-key encrypted.

The ``draw_bases_*`` functions return boolean y-masks of shape
``(rounds, n)`` for the batched harness; ``choose_bases_*`` return a single
BasisVector and consume the random stream the same way.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence

import numpy as np

from .protocol_rules import (
    ErrorEstimate,
    InvalidRoundError,
    RoundClass,
    classify_count,
    estimate_error_rate,
    make_record,
)
from .quantum_core import (
    MAX_DENSE_QUBITS,
    MIN_QUBITS,
    Basis,
    BasisVector,
    Outcome,
    ghz_amplitudes,
    measure_all_batch,
    sample_ghz_outcomes_batch,
)

DEFAULT_EPSILON = 0.05
DEFAULT_KEY_LENGTH = 1000
KEYSET_VERSION = 1


class SchemeKind(str, Enum):
    SYMMETRIC = "symmetric"
    FAVORED = "favored"
    ENCRYPTED = "encrypted"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    kind: SchemeKind
    epsilon: float | None = None
    key_length: int | None = None

    def __post_init__(self) -> None:
        kind = SchemeKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is SchemeKind.FAVORED:
            if self.epsilon is None:
                object.__setattr__(self, "epsilon", DEFAULT_EPSILON)
            check_epsilon(self.epsilon)
        elif self.epsilon is not None:
            raise ConfigError("epsilon only applies to the favored scheme")
        if kind is SchemeKind.ENCRYPTED:
            if self.key_length is None:
                object.__setattr__(self, "key_length", DEFAULT_KEY_LENGTH)
            if not isinstance(self.key_length, int) or self.key_length < 1:
                raise ConfigError(f"key_length must be a positive integer, got {self.key_length!r}")
        elif self.key_length is not None:
            raise ConfigError("key_length only applies to the encrypted scheme")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value}
        if self.epsilon is not None:
            d["epsilon"] = self.epsilon
        if self.key_length is not None:
            d["key_length"] = self.key_length
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SchemeConfig:
        return cls(SchemeKind(d["kind"]), d.get("epsilon"), d.get("key_length"))


def check_epsilon(epsilon: float) -> None:
    if not (isinstance(epsilon, (int, float)) and 0 < epsilon <= 0.5):
        raise ConfigError(f"epsilon must be in (0, 0.5], got {epsilon!r}")


def mask_to_bases(mask: Sequence[bool]) -> BasisVector:
    return tuple(Basis.Y if y else Basis.X for y in mask)


# -- symmetric / favored ----------------------------------------------------


def draw_bases_symmetric(n: int, rand: np.random.Generator, rounds: int) -> np.ndarray:
    return rand.random((rounds, n)) < 0.5


def draw_bases_favored(n: int, epsilon: float, rand: np.random.Generator, rounds: int) -> np.ndarray:
    check_epsilon(epsilon)
    return rand.random((rounds, n)) < epsilon


def choose_bases_symmetric(n: int, rand: np.random.Generator) -> BasisVector:
    """Each party picks x or y with probability 1/2."""
    return mask_to_bases(draw_bases_symmetric(n, rand, 1)[0])


def choose_bases_favored(n: int, epsilon: float, rand: np.random.Generator) -> BasisVector:
    """Each party picks y with probability ``epsilon``, x otherwise."""
    return mask_to_bases(draw_bases_favored(n, epsilon, rand, 1)[0])


# -- measuring-basis-encrypted ------------------------------------------------


def derive_alice_control_entry(alice_outcome: Outcome, round_class: RoundClass) -> Basis:
    """Alice's control basis from a retained bootstrap round.

    0 mod 4: outcome 0 -> x, 1 -> y. 2 mod 4 is inverted: 0 -> y, 1 -> x.
    """
    if round_class is RoundClass.ODD_Y:
        raise InvalidRoundError("control entries come only from valid rounds")
    use_y = bool(alice_outcome) ^ (round_class is RoundClass.TWO_MOD_4)
    return Basis.Y if use_y else Basis.X


@dataclass(frozen=True)
class ControlKeySet:
    """Per-party control keys for the encrypted scheme.

    ``participant_keys[p]`` is the key of party p+2; ``alice_key`` holds
    Alice's basis per index, already resolved from her bootstrap outcome.
    """

    n: int
    participant_keys: tuple[tuple[Basis, ...], ...]
    alice_key: tuple[Basis, ...]
    bootstrap_check: ErrorEstimate | None = field(default=None, compare=False)
    bootstrap_rounds: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.n < MIN_QUBITS:
            raise ConfigError(f"need at least {MIN_QUBITS} parties")
        if len(self.participant_keys) != self.n - 1:
            raise ConfigError(f"expected {self.n - 1} participant keys, got {len(self.participant_keys)}")
        lengths = {len(self.alice_key), *(len(k) for k in self.participant_keys)}
        if len(lengths) != 1 or not self.alice_key:
            raise ConfigError("control keys must share one positive length")

    @property
    def key_length(self) -> int:
        return len(self.alice_key)

    def column(self, index: int) -> BasisVector:
        return (self.alice_key[index], *(k[index] for k in self.participant_keys))

    def y_mask(self) -> np.ndarray:
        """Shape ``(key_length, n)``; column 0 is Alice."""
        rows = [self.alice_key, *self.participant_keys]
        return np.array([[b is Basis.Y for b in row] for row in rows], dtype=bool).T

    def invalid_indices(self) -> list[int]:
        counts = self.y_mask().sum(axis=1)
        return [int(i) for i in np.flatnonzero(counts % 2)]

    def to_json(self) -> str:
        doc = {
            "version": KEYSET_VERSION,
            "n": self.n,
            "key_length": self.key_length,
            "participant_keys": ["".join(b.value for b in k) for k in self.participant_keys],
            "alice_key": "".join(b.value for b in self.alice_key),
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ControlKeySet:
        doc = json.loads(text)
        if doc.get("version") != KEYSET_VERSION:
            raise ConfigError(f"unsupported control key version {doc.get('version')!r}")

        def parse(seq: str | list[str]) -> tuple[Basis, ...]:
            return tuple(Basis(ch) for ch in seq)

        keys = cls(
            doc["n"],
            tuple(parse(k) for k in doc["participant_keys"]),
            parse(doc["alice_key"]),
        )
        if keys.key_length != doc["key_length"]:
            raise ConfigError("key_length does not match the stored keys")
        return keys


def keys_from_outcomes(
    alice_outcomes: Sequence[Outcome],
    participant_outcomes: Sequence[Sequence[Outcome]],
    classes: Sequence[RoundClass],
) -> ControlKeySet:
    """Turn retained valid bootstrap rounds into control keys.

    ``participant_outcomes[j]`` holds parties 2..n for retained round j. A
    participant uses y wherever their retained bit is 1.
    """
    n = len(participant_outcomes[0]) + 1
    participant_keys = tuple(
        tuple(Basis.Y if row[p] else Basis.X for row in participant_outcomes) for p in range(n - 1)
    )
    alice_key = tuple(derive_alice_control_entry(a, c) for a, c in zip(alice_outcomes, classes))
    return ControlKeySet(n, participant_keys, alice_key)


def bootstrap_control_keys(
    n: int,
    key_length: int = DEFAULT_KEY_LENGTH,
    rand: np.random.Generator | None = None,
    *,
    check_fraction: float = 0.0,
    batch: int = 1024,
) -> ControlKeySet:
    """Generate control keys by running symmetric HBB rounds.

    Valid rounds are retained until ``key_length`` entries exist; odd rounds
    are dropped. With ``check_fraction > 0`` that share of valid rounds is
    disclosed for an error check instead of being kept, and the estimate is
    attached as ``bootstrap_check``. ``bootstrap_rounds`` records how many
    GHZ rounds were consumed. Every index of the result has an even total
    y-count.
    """
    if not isinstance(key_length, int) or key_length < 1:
        raise ConfigError(f"key_length must be a positive integer, got {key_length!r}")
    if not 0.0 <= check_fraction < 1.0:
        raise ConfigError("bootstrap check_fraction must be in [0, 1)")
    if rand is None:
        rand = np.random.default_rng()
    if n <= MAX_DENSE_QUBITS:
        batch = max(1, min(batch, (1 << 20) >> n))

    alice: list[int] = []
    others: list[tuple[int, ...]] = []
    classes: list[RoundClass] = []
    checks = []
    round_id = consumed = 0
    while len(alice) < key_length:
        is_y = draw_bases_symmetric(n, rand, batch)
        if n <= MAX_DENSE_QUBITS:
            outcomes = measure_all_batch(ghz_amplitudes(n, batch), n, is_y, rand)
        else:
            outcomes = sample_ghz_outcomes_batch(n, is_y, rand)
        disclose = rand.random(batch) < check_fraction
        counts = is_y.sum(axis=1)
        for row in range(batch):
            cls = classify_count(int(counts[row]))
            if cls.valid and len(alice) < key_length:
                if disclose[row]:
                    checks.append(make_record(round_id, mask_to_bases(is_y[row]), outcomes[row]))
                else:
                    alice.append(int(outcomes[row, 0]))
                    others.append(tuple(int(o) for o in outcomes[row, 1:]))
                    classes.append(cls)
                consumed = round_id + 1
            round_id += 1

    keys = keys_from_outcomes(alice, others, classes)
    check = estimate_error_rate(checks) if check_fraction > 0 else None
    return ControlKeySet(keys.n, keys.participant_keys, keys.alice_key, check, consumed)


def choose_bases_encrypted(keys: ControlKeySet, round_index: int) -> BasisVector:
    """Bases for a round, reading every key cyclically."""
    if round_index < 0:
        raise ValueError("round_index must be non-negative")
    return keys.column(round_index % keys.key_length)


def encrypted_bases_mask(keys: ControlKeySet, round_ids: np.ndarray) -> np.ndarray:
    return keys.y_mask()[np.asarray(round_ids) % keys.key_length]


# Table 1 of the three-party example, rows Alice / Bob / Charlie.
TABLE1_ROWS = ("xyxyxxyxxy", "xxyyxxyyxx", "xyyxxxxyxy")


def table1_keys() -> ControlKeySet:
    alice, bob, charlie = (tuple(Basis(c) for c in row) for row in TABLE1_ROWS)
    return ControlKeySet(3, (bob, charlie), alice)
