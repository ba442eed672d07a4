"""Dense GHZ-state simulation with projective sigma-x / sigma-y measurements.

Index convention: party 1 (Alice) is the most significant bit of the
basis-state index, so index ``i1 i2 ... in`` read as a binary number.
Outcome 0 is the positive-axis eigenstate, outcome 1 the negative one.

Every stochastic function takes an explicit ``numpy.random.Generator``.
The batched helpers (``ghz_amplitudes``, ``measure_batch`` ...) operate on
arrays of shape ``(batch, 2**n)`` and are what the session harness uses;
the single-state functions are thin wrappers around them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

MIN_QUBITS = 2
MAX_DENSE_QUBITS = 16
NORM_TOL = 1e-12

_SQRT1_2 = 1 / np.sqrt(2)
# (-i)**m for m mod 4
_MINUS_I_POW = (1 + 0j, -1j, -1 + 0j, 1j)


class Basis(str, Enum):
    X = "x"
    Y = "y"

    def __str__(self) -> str:
        return self.value


Outcome = int
BasisVector = tuple[Basis, ...]


class BoundsError(ValueError):
    """Qubit count or party index outside the supported range."""


def as_bases(bases: Iterable[Basis | str] | str) -> BasisVector:
    """Normalize ``"yxx"``, ``["y", "x", "x"]`` or Basis members to a BasisVector."""
    return tuple(Basis(str(b).lower()) for b in bases)


def format_bases(bases: Iterable[Basis | str]) -> str:
    return "".join(Basis(b).value for b in bases)


def y_mask(bases: Sequence[Basis | str]) -> np.ndarray:
    return np.array([Basis(b) is Basis.Y for b in bases], dtype=bool)


def _check_n(n: int, upper: int = MAX_DENSE_QUBITS) -> None:
    if not isinstance(n, (int, np.integer)) or not MIN_QUBITS <= n <= upper:
        raise BoundsError(f"qubit count must be in [{MIN_QUBITS}, {upper}], got {n!r}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state of ``n`` qubits; ``amps`` is stored read-only."""

    n: int
    amps: np.ndarray

    def __post_init__(self) -> None:
        _check_n(self.n)
        amps = np.array(self.amps, dtype=np.complex128)
        if amps.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} amplitudes, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: sum |a|^2 = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_label(cls, label: str) -> StateVector:
        """Product state from a label such as ``"0+1-"``.

        Characters: ``0``/``1`` computational, ``+``/``-`` x-eigenstates,
        ``r``/``l`` y-eigenstates (outcome 0 / 1).
        """
        single = {
            "0": (1, 0),
            "1": (0, 1),
            "+": (_SQRT1_2, _SQRT1_2),
            "-": (_SQRT1_2, -_SQRT1_2),
            "r": (_SQRT1_2, 1j * _SQRT1_2),
            "l": (_SQRT1_2, -1j * _SQRT1_2),
        }
        vec = np.ones(1, dtype=np.complex128)
        for ch in label:
            vec = np.kron(vec, np.array(single[ch], dtype=np.complex128))
        return cls(len(label), vec)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


# -- batched kernels ---------------------------------------------------------


def ghz_amplitudes(n: int, batch: int = 1) -> np.ndarray:
    """``batch`` copies of the n-qubit GHZ state, shape ``(batch, 2**n)``."""
    _check_n(n)
    amps = np.zeros((batch, 1 << n), dtype=np.complex128)
    amps[:, 0] = _SQRT1_2
    amps[:, -1] = _SQRT1_2
    return amps


def _bra_phase(is_y: np.ndarray, outcome: np.ndarray) -> np.ndarray:
    # <s_b| = (<0| + c <1|)/sqrt2 with c = (-1)^s for X and (-1)^s * (-i) for Y
    sign = 1 - 2 * outcome.astype(np.int8)
    return np.where(is_y, -1j, 1.0) * sign


def measure_batch(
    amps: np.ndarray,
    n: int,
    party: int,
    is_y: np.ndarray | bool,
    uniforms: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Measure qubit ``party`` of every state in the batch.

    ``is_y`` selects the basis per row, ``uniforms`` are U[0, 1) draws used to
    sample the Born rule (outcome 1 iff u >= P(0)). Returns the outcomes and
    a fresh array of renormalized post-measurement states.
    """
    if not 0 <= party < n:
        raise BoundsError(f"party index {party} out of range for n={n}")
    batch = amps.shape[0]
    is_y = np.broadcast_to(np.asarray(is_y, dtype=bool), (batch,))
    view = amps.reshape(batch, 1 << party, 2, 1 << (n - party - 1))
    a0, a1 = view[:, :, 0, :], view[:, :, 1, :]

    zeros = np.zeros(batch, dtype=np.int8)
    c0 = _bra_phase(is_y, zeros)[:, None, None]
    r0 = (a0 + c0 * a1) * _SQRT1_2
    r1 = (a0 - c0 * a1) * _SQRT1_2
    p0 = np.einsum("bij,bij->b", r0.conj(), r0).real
    p1 = np.einsum("bij,bij->b", r1.conj(), r1).real
    # a branch with zero probability can never be drawn
    outcome = ((np.asarray(uniforms) * (p0 + p1) >= p0) & (p1 > 0)).astype(np.int8)

    pick = (outcome == 1)[:, None, None]
    r = np.where(pick, r1, r0) / np.sqrt(np.where(outcome == 1, p1, p0))[:, None, None]
    c = _bra_phase(is_y, outcome)[:, None, None]

    out = np.empty_like(view)
    out[:, :, 0, :] = r * _SQRT1_2
    out[:, :, 1, :] = np.conj(c) * r * _SQRT1_2
    return outcome, out.reshape(batch, 1 << n)


def measure_all_batch(
    amps: np.ndarray,
    n: int,
    is_y: np.ndarray,
    rand: np.random.Generator,
    order: Sequence[int] | None = None,
) -> np.ndarray:
    """Measure every qubit; ``is_y`` has shape ``(batch, n)``. Returns int8 outcomes."""
    batch = amps.shape[0]
    outcomes = np.zeros((batch, n), dtype=np.int8)
    for party in range(n) if order is None else order:
        outcomes[:, party], amps = measure_batch(
            amps, n, party, is_y[:, party], rand.random(batch)
        )
    return outcomes


def sample_ghz_outcomes_batch(n: int, is_y: np.ndarray, rand: np.random.Generator) -> np.ndarray:
    """Sample joint GHZ outcomes straight from the closed-form distribution.

    No state vector is built, so ``n`` is not limited by memory. Odd y-count:
    uniform over all strings. Even y-count m: uniform over strings whose
    parity equals (m/2) mod 2; Alice's bit is fixed to hit that parity.
    """
    if n < MIN_QUBITS:
        raise BoundsError(f"qubit count must be >= {MIN_QUBITS}")
    batch = is_y.shape[0]
    outcomes = rand.integers(0, 2, size=(batch, n), dtype=np.int8)
    m = is_y.sum(axis=1)
    even = m % 2 == 0
    target = (m // 2) % 2
    rest = outcomes[:, 1:].sum(axis=1) % 2
    outcomes[even, 0] = (target[even] - rest[even]) % 2
    return outcomes


# -- single-state API ---------------------------------------------------------


def make_ghz(n: int) -> StateVector:
    """(|00...0> + |11...1>) / sqrt(2) on ``n`` qubits."""
    return StateVector(n, ghz_amplitudes(n)[0])


def measure_qubit(
    state: StateVector, party_index: int, basis: Basis | str, rand: np.random.Generator
) -> tuple[Outcome, StateVector]:
    is_y = Basis(basis) is Basis.Y
    outcome, amps = measure_batch(
        state.amps[None, :], state.n, party_index, is_y, np.array([rand.random()])
    )
    return int(outcome[0]), StateVector(state.n, amps[0])


def measure_all(
    state: StateVector,
    bases: Sequence[Basis | str],
    rand: np.random.Generator,
    order: Sequence[int] | None = None,
) -> tuple[Outcome, ...]:
    """Measure all qubits, party ``i`` in ``bases[i]``.

    ``order`` permutes the sequence of single-qubit measurements; the joint
    distribution does not depend on it.
    """
    if len(bases) != state.n:
        raise ValueError(f"need {state.n} bases, got {len(bases)}")
    outcomes = [0] * state.n
    for party in range(state.n) if order is None else order:
        outcomes[party], state = measure_qubit(state, party, bases[party], rand)
    return tuple(outcomes)


def sample_ghz_outcomes(n: int, bases: Sequence[Basis | str], rand: np.random.Generator) -> tuple[Outcome, ...]:
    row = sample_ghz_outcomes_batch(n, y_mask(bases)[None, :], rand)[0]
    return tuple(int(b) for b in row)


# -- closed-form oracle -------------------------------------------------------


def amplitude_in_bases(n: int, bases: Sequence[Basis | str], outcomes: Sequence[Outcome]) -> complex:
    """Coefficient of the product eigenstate ``outcomes`` in the GHZ expansion.

    2^{-(n+1)/2} * (1 + (-i)^m (-1)^p), with m the y-count and p the outcome
    parity. Computed without any state vector.
    """
    if len(bases) != n or len(outcomes) != n:
        raise ValueError("bases and outcomes must both have length n")
    m = sum(Basis(b) is Basis.Y for b in bases)
    p = sum(outcomes) % 2
    term = _MINUS_I_POW[m % 4] * (-1 if p else 1)
    return (1 + term) * 2.0 ** (-(n + 1) / 2)


def _parity_table(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint32)
    parity = np.zeros(1 << n, dtype=np.int8)
    for bit in range(n):
        parity ^= ((idx >> bit) & 1).astype(np.int8)
    return parity


def amplitudes_in_bases(n: int, bases: Sequence[Basis | str]) -> np.ndarray:
    """Oracle amplitudes for all 2^n outcome strings (index convention as StateVector)."""
    _check_n(n)
    if len(bases) != n:
        raise ValueError("bases must have length n")
    m = int(y_mask(bases).sum())
    sign = 1 - 2 * _parity_table(n).astype(np.float64)
    return (1 + _MINUS_I_POW[m % 4] * sign) * 2.0 ** (-(n + 1) / 2)


def distribution_in_bases(n: int, bases: Sequence[Basis | str]) -> dict[tuple[Outcome, ...], float]:
    """Born distribution of GHZ outcomes in ``bases``, support only."""
    probs = np.abs(amplitudes_in_bases(n, bases)) ** 2
    return {
        tuple(int(b) for b in format(i, f"0{n}b")): float(pr)
        for i, pr in enumerate(probs)
        if pr > NORM_TOL
    }


def expand_in_bases(state: StateVector, bases: Sequence[Basis | str]) -> np.ndarray:
    """Amplitudes of ``state`` on every product eigenstate of ``bases``.

    Dense change of basis, one 2x2 rotation per qubit; this is the path the
    closed-form oracle is checked against.
    """
    if len(bases) != state.n:
        raise ValueError("bases must have length n")
    rows = {
        Basis.X: np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQRT1_2,
        Basis.Y: np.array([[1, -1j], [1, 1j]], dtype=np.complex128) * _SQRT1_2,
    }
    tensor = state.amps.reshape((2,) * state.n)
    for axis, b in enumerate(as_bases(bases)):
        tensor = np.moveaxis(np.tensordot(rows[b], tensor, axes=([1], [axis])), 0, axis)
    return tensor.reshape(-1)


def all_basis_vectors(n: int) -> Iterable[BasisVector]:
    return itertools.product((Basis.X, Basis.Y), repeat=n)


def oracle_mismatches(n: int, tol: float = NORM_TOL) -> list[tuple[int, BasisVector, tuple[Outcome, ...], float]]:
    """Compare dense expansion with the closed form on every basis vector.

    Returns ``(n, bases, outcome, abs_error)`` for each entry exceeding ``tol``.
    """
    ghz = make_ghz(n)
    bad = []
    for bases in all_basis_vectors(n):
        diff = np.abs(expand_in_bases(ghz, bases) - amplitudes_in_bases(n, bases))
        for i in np.flatnonzero(diff > tol):
            outcome = tuple(int(b) for b in format(int(i), f"0{n}b"))
            bad.append((n, bases, outcome, float(diff[i])))
    return bad
