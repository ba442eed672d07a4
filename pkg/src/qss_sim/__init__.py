"""Simulator for n-party GHZ quantum secret sharing and its efficient variants."""

from .adversary import EveKind, EveModel, intercept, predict_error_rate
from .harness import SessionConfig, SessionReport, Verdict, reconstruct_shared_secret, run_session
from .protocol_rules import Designation, RoundClass, RoundRecord, classify_round, reconstruct_secret_bit
from .quantum_core import (
    Basis,
    StateVector,
    amplitude_in_bases,
    distribution_in_bases,
    make_ghz,
    measure_all,
    measure_qubit,
)
from .schemes import ControlKeySet, SchemeConfig, SchemeKind, bootstrap_control_keys

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "ControlKeySet",
    "Designation",
    "EveKind",
    "EveModel",
    "RoundClass",
    "RoundRecord",
    "SchemeConfig",
    "SchemeKind",
    "SessionConfig",
    "SessionReport",
    "StateVector",
    "Verdict",
    "amplitude_in_bases",
    "bootstrap_control_keys",
    "classify_round",
    "distribution_in_bases",
    "intercept",
    "make_ghz",
    "measure_all",
    "measure_qubit",
    "predict_error_rate",
    "reconstruct_secret_bit",
    "reconstruct_shared_secret",
    "run_session",
]
