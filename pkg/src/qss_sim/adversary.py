"""Intercept-resend eavesdroppers acting on the transit qubits (parties 2..n).

Eve measures each targeted qubit in her chosen basis before the legitimate
parties measure; projection leaves the qubit in the observed eigenstate,
which is exactly what resending that eigenstate produces.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, NamedTuple, Sequence

import numpy as np

from .protocol_rules import RoundClass, reconstruct_secret_bit
from .quantum_core import Basis, Outcome, StateVector, measure_batch
from .schemes import ConfigError


class EveKind(str, Enum):
    SINGLE_RANDOM = "single-random"
    ALL_RANDOM = "all-random"
    ALL_X = "all-x"


@dataclass(frozen=True)
class EveModel:
    """``target_party`` is a party number in 2..n (Alice is party 1)."""

    kind: EveKind
    target_party: int | None = None

    def __post_init__(self) -> None:
        kind = EveKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is EveKind.SINGLE_RANDOM:
            if self.target_party is None:
                object.__setattr__(self, "target_party", 2)
            elif not isinstance(self.target_party, int) or self.target_party < 2:
                raise ConfigError("Eve can only target transit qubits, parties 2..n")
        elif self.target_party is not None:
            raise ConfigError("target_party only applies to single-random interception")

    def targets(self, n: int) -> list[int]:
        """0-based indices of the intercepted qubits."""
        if self.kind is EveKind.SINGLE_RANDOM:
            if self.target_party > n:
                raise ConfigError(f"target party {self.target_party} does not exist for n={n}")
            return [self.target_party - 1]
        return list(range(1, n))

    @property
    def intercepts_all(self) -> bool:
        return self.kind is not EveKind.SINGLE_RANDOM

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value}
        if self.target_party is not None:
            d["target_party"] = self.target_party
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> EveModel:
        return cls(EveKind(d["kind"]), d.get("target_party"))


class Interception(NamedTuple):
    party_index: int
    basis: Basis
    outcome: Outcome


@dataclass(frozen=True)
class EveRecord:
    entries: tuple[Interception, ...]


def intercept_batch(
    amps: np.ndarray, n: int, model: EveModel, rand: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Intercept every state in the batch.

    Returns the post-interception states plus Eve's y-mask and outcomes, both
    of shape ``(batch, len(targets))``.
    """
    targets = model.targets(n)
    batch = amps.shape[0]
    eve_y = np.zeros((batch, len(targets)), dtype=bool)
    eve_out = np.zeros((batch, len(targets)), dtype=np.int8)
    for col, party in enumerate(targets):
        if model.kind is not EveKind.ALL_X:
            eve_y[:, col] = rand.random(batch) < 0.5
        eve_out[:, col], amps = measure_batch(amps, n, party, eve_y[:, col], rand.random(batch))
    return amps, eve_y, eve_out


def intercept(state: StateVector, model: EveModel, rand: np.random.Generator) -> tuple[StateVector, EveRecord]:
    amps, eve_y, eve_out = intercept_batch(state.amps[None, :], state.n, model, rand)
    entries = tuple(
        Interception(party, Basis.Y if eve_y[0, col] else Basis.X, int(eve_out[0, col]))
        for col, party in enumerate(model.targets(state.n))
    )
    return StateVector(state.n, amps[0]), EveRecord(entries)


def predict_error_rate(n: int, model: EveModel) -> float:
    """Closed-form error rate Eve induces on sifted rounds.

    All-random: (1 - 2^-(n-1)) / 2. Single-random: 1/4. All-x: 1/2, which
    holds on check rounds containing y choices; all-x rounds see no error
    (see ``predict_round_error_rate``).
    """
    if n < 2:
        raise ConfigError("need at least two parties")
    if model.kind is EveKind.ALL_RANDOM:
        return (1 - 0.5 ** (n - 1)) / 2
    if model.kind is EveKind.SINGLE_RANDOM:
        return 0.25
    return 0.5


def predict_round_error_rate(bases: Sequence[Basis | str], model: EveModel) -> float:
    """Expected error for one valid round with the given legitimate bases.

    A mismatch on any intercepted qubit randomizes the parity (error 1/2);
    full agreement leaves it intact.
    """
    bases = [Basis(b) for b in bases]
    targets = model.targets(len(bases))
    if model.kind is EveKind.ALL_X:
        mismatch = any(bases[t] is Basis.Y for t in targets)
        return 0.5 if mismatch else 0.0
    return 0.5 * (1 - 0.5 ** len(targets))


def eve_guess(eve_outcomes: Sequence[Outcome], round_class: RoundClass) -> Outcome:
    """Eve's guess at the secret: her own outcomes run through the public class rule."""
    return reconstruct_secret_bit(eve_outcomes, round_class)
