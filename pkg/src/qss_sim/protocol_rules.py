"""Round classification, parity reconstruction, sifting and error estimation.

Pure logic of the n-party HBB secret-sharing protocol. A round is usable
only when an even number of parties (Alice included) measured in the
y-basis; the participants then recover Alice's bit as the XOR of their own
outcomes, flipped when the y-count is 2 mod 4.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

from .quantum_core import Basis, BasisVector, Outcome


class RoundClass(str, Enum):
    ODD_Y = "odd"
    TWO_MOD_4 = "2mod4"
    ZERO_MOD_4 = "0mod4"

    @property
    def valid(self) -> bool:
        return self is not RoundClass.ODD_Y


class Designation(str, Enum):
    DISCARDED = "discarded"
    CHECK = "check"
    KEY = "key"


class InvalidRoundError(ValueError):
    """Raised when an odd-y round is used where a valid round is required."""


def classify_count(y_count: int) -> RoundClass:
    if y_count % 2:
        return RoundClass.ODD_Y
    return RoundClass.TWO_MOD_4 if y_count % 4 == 2 else RoundClass.ZERO_MOD_4


def classify_round(bases: Iterable[Basis | str]) -> RoundClass:
    """Class of a round from every party's basis, Alice's included."""
    return classify_count(sum(Basis(b) is Basis.Y for b in bases))


def reconstruct_secret_bit(participant_outcomes: Sequence[Outcome], round_class: RoundClass) -> Outcome:
    """Alice's bit from the other n-1 outcomes.

    XOR of the outcomes, plus 1 when the round is 2 mod 4.
    """
    if round_class is RoundClass.ODD_Y:
        raise InvalidRoundError("odd y-count rounds carry no shared bit")
    bit = 0
    for o in participant_outcomes:
        bit ^= o
    return bit ^ 1 if round_class is RoundClass.TWO_MOD_4 else bit


@dataclass(frozen=True, slots=True)
class RoundRecord:
    round_id: int
    bases: BasisVector
    outcomes: tuple[Outcome, ...]
    round_class: RoundClass
    designation: Designation

    @property
    def alice_outcome(self) -> Outcome:
        return self.outcomes[0]

    @property
    def participant_outcomes(self) -> tuple[Outcome, ...]:
        return self.outcomes[1:]


def make_record(
    round_id: int,
    bases: Sequence[Basis | str],
    outcomes: Sequence[Outcome],
    designation: Designation | None = None,
) -> RoundRecord:
    """Build a record with its class derived from ``bases``.

    Without an explicit designation, odd rounds are discarded and valid ones
    become key rounds.
    """
    bases = tuple(Basis(b) for b in bases)
    if len(bases) != len(outcomes):
        raise ValueError("bases and outcomes differ in length")
    round_class = classify_round(bases)
    if designation is None:
        designation = Designation.KEY if round_class.valid else Designation.DISCARDED
    return RoundRecord(round_id, bases, tuple(int(o) for o in outcomes), round_class, designation)


def sift(records: Iterable[RoundRecord]) -> list[RoundRecord]:
    """Drop odd-y rounds, keep order and designations."""
    return [r for r in records if r.round_class.valid]


class ErrorEstimate(NamedTuple):
    rate: float
    errors: int
    samples: int

    @property
    def insufficient_samples(self) -> bool:
        return self.samples == 0


def estimate_error_rate(check_records: Iterable[RoundRecord]) -> ErrorEstimate:
    """Fraction of check rounds where the participants' reconstruction disagrees with Alice.

    An empty sample gives rate 0.0 with ``insufficient_samples`` set.
    """
    errors = samples = 0
    for r in check_records:
        if not r.round_class.valid:
            raise InvalidRoundError(f"round {r.round_id} has an odd y-count")
        samples += 1
        if reconstruct_secret_bit(r.participant_outcomes, r.round_class) != r.alice_outcome:
            errors += 1
    return ErrorEstimate(errors / samples if samples else 0.0, errors, samples)
