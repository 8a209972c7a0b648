"""Public key infrastructure for an offline-capable central bank digital currency.

Certificate hierarchy, a compact TLV certificate format, organizational
revocation, a multi-generation rollover planner and an ecosystem simulator
that checks offline smartcards across certificate generations.
"""

from .authority import (
    AuthorityState,
    Credential,
    RegistrySnapshot,
    RejectReason,
    RevocationRegistry,
    Verdict,
    materialize,
    verify_chain,
)
from .codec import MalformedCertificate, decode, encode
from .planner import (
    InfeasibleSchedule,
    PhaseBounds,
    RolloverProfile,
    Schedule,
    Violation,
    issuer_for,
    plan_schedule,
    table1_minimums,
    validate_schedule,
)
from .simulator import Report, Scenario, replay_counterexample, run
from .smartcard import Smartcard, manufacture, mutual_authenticate
from .types import Certificate, Phase, PhasePlan, Role, phase_at

__all__ = [
    "AuthorityState",
    "Certificate",
    "Credential",
    "InfeasibleSchedule",
    "MalformedCertificate",
    "Phase",
    "PhaseBounds",
    "PhasePlan",
    "RegistrySnapshot",
    "RejectReason",
    "Report",
    "RevocationRegistry",
    "Role",
    "RolloverProfile",
    "Scenario",
    "Schedule",
    "Smartcard",
    "Verdict",
    "Violation",
    "decode",
    "encode",
    "issuer_for",
    "manufacture",
    "materialize",
    "mutual_authenticate",
    "phase_at",
    "plan_schedule",
    "replay_counterexample",
    "run",
    "table1_minimums",
    "validate_schedule",
]
