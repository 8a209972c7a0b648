"""Shared domain vocabulary: ticks, roles, phases and certificates."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Protocol

from .crypto import PublicKey, Signature

#: Default number of ticks in one base unit (the smartcard validity period).
DEFAULT_TICKS_PER_U = 12

MAX_U64 = 2**64 - 1


def check_tick(value: int, name: str = "tick") -> int:
    """Return ``value`` if it is a valid tick, raise otherwise."""
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"{name} must be an int, got {type(value).__name__}")
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    if value > MAX_U64:
        raise OverflowError(f"{name} exceeds 64-bit range: {value}")
    return value


class Role(str, enum.Enum):
    ROOT_CA = "RootCA"
    HARDWARE_CA = "HardwareCA"
    MANUFACTURER_CA = "ManufacturerCA"
    SMARTCARD_EE = "SmartcardEE"
    OPERATIONAL_CA = "OperationalCA"
    CENTRAL_REGISTER = "CentralRegister"
    TIMESTAMP_SERVICE = "TimestampService"
    MINTING = "Minting"
    FINANCIAL_CA = "FinancialCA"
    FSP = "FSP"

    @property
    def code(self) -> int:
        return _ROLE_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> Role:
        return _ROLES_BY_CODE[code]

    @property
    def parent(self) -> Role | None:
        """Role that issues certificates of this role (``None`` for the root)."""
        return PARENT.get(self)

    @property
    def is_ca(self) -> bool:
        return self in CA_ROLES

    def __str__(self) -> str:
        return self.value


_ROLE_CODES = {role: i for i, role in enumerate(Role)}
_ROLES_BY_CODE = {i: role for role, i in _ROLE_CODES.items()}

#: Issuer role -> roles it may issue.
ISSUES: dict[Role, frozenset[Role]] = {
    Role.ROOT_CA: frozenset({Role.HARDWARE_CA, Role.OPERATIONAL_CA, Role.FINANCIAL_CA}),
    Role.HARDWARE_CA: frozenset({Role.MANUFACTURER_CA}),
    Role.MANUFACTURER_CA: frozenset({Role.SMARTCARD_EE}),
    Role.OPERATIONAL_CA: frozenset(
        {Role.CENTRAL_REGISTER, Role.TIMESTAMP_SERVICE, Role.MINTING}
    ),
    Role.FINANCIAL_CA: frozenset({Role.FSP}),
}

PARENT: dict[Role, Role] = {
    child: issuer for issuer, children in ISSUES.items() for child in children
}

CA_ROLES = frozenset(ISSUES)
END_ENTITY_ROLES = frozenset(Role) - CA_ROLES
STRAND_HEADS = (Role.HARDWARE_CA, Role.OPERATIONAL_CA, Role.FINANCIAL_CA)


def may_issue(issuer: Role, subject: Role) -> bool:
    return subject in ISSUES.get(issuer, ())


def depth(role: Role) -> int:
    """Distance from the root in the issuance hierarchy."""
    d = 0
    while (role := PARENT.get(role)) is not None:  # type: ignore[assignment]
        d += 1
    return d


@dataclass(frozen=True, slots=True)
class PhasePlan:
    """Durations (in ticks) of the ramp-up, active and passive phases."""

    ramp_up: int
    active: int
    passive: int

    def __post_init__(self) -> None:
        check_tick(self.ramp_up, "ramp_up")
        check_tick(self.active, "active")
        check_tick(self.passive, "passive")
        if self.active < 1:
            raise ValueError("active phase must be at least one tick")

    @property
    def total_validity(self) -> int:
        return self.ramp_up + self.active + self.passive


class Phase(str, enum.Enum):
    BEFORE_VALIDITY = "BeforeValidity"
    RAMP_UP = "RampUp"
    ACTIVE = "Active"
    PASSIVE = "Passive"
    EXPIRED = "Expired"


class Windowed(Protocol):
    verify_from: int
    issue_from: int
    issue_until: int
    verify_until: int


def phase_at(obj: Windowed, t: int) -> Phase:
    """Classify tick ``t`` against a verify/issue window pair.

    Phase starts are inclusive and phase ends exclusive, except that
    ``verify_until`` itself belongs to the last non-empty phase.
    """
    if t < obj.verify_from:
        return Phase.BEFORE_VALIDITY
    if t > obj.verify_until:
        return Phase.EXPIRED
    if t < obj.issue_from:
        return Phase.RAMP_UP
    if t < obj.issue_until or obj.issue_until == obj.verify_until:
        return Phase.ACTIVE
    return Phase.PASSIVE


def is_active(obj: Windowed, t: int) -> bool:
    return phase_at(obj, t) is Phase.ACTIVE


def exists_at(obj: Windowed, t: int) -> bool:
    return obj.verify_from <= t <= obj.verify_until


MAX_REF_OCTETS = 32


@dataclass(frozen=True)
class Certificate:
    """A role-tagged credential with verification and issuance windows."""

    serial: int
    role: Role
    holder_ref: str
    issuer_ref: str
    public_key: PublicKey
    verify_from: int
    verify_until: int
    issue_from: int
    issue_until: int
    signature: Signature = field(default=Signature(0, b""), compare=True)

    def __post_init__(self) -> None:
        if not 0 <= self.serial <= MAX_U64:
            raise ValueError(f"serial out of 64-bit range: {self.serial}")
        for name in ("verify_from", "issue_from", "issue_until", "verify_until"):
            check_tick(getattr(self, name), name)
        if not (
            self.verify_from <= self.issue_from <= self.issue_until <= self.verify_until
        ):
            raise ValueError(
                "windows must satisfy verify_from <= issue_from <= issue_until "
                f"<= verify_until, got {self.verify_from}/{self.issue_from}/"
                f"{self.issue_until}/{self.verify_until}"
            )

    @property
    def is_self_signed(self) -> bool:
        return self.role is Role.ROOT_CA and self.issuer_ref == self.holder_ref

    @property
    def plan(self) -> PhasePlan:
        return PhasePlan(
            self.issue_from - self.verify_from,
            self.issue_until - self.issue_from,
            self.verify_until - self.issue_until,
        )

    @cached_property
    def tbs(self) -> bytes:
        """Encoded to-be-signed bytes (everything but the signature)."""
        from .codec import encode_tbs

        return encode_tbs(self)

    @property
    def ref(self) -> str:
        return f"{self.holder_ref}#{self.serial}"

    def __repr__(self) -> str:
        return (
            f"Certificate({self.role.value} {self.holder_ref!r} serial={self.serial} "
            f"issuer={self.issuer_ref!r} verify=[{self.verify_from},{self.verify_until}] "
            f"issue=[{self.issue_from},{self.issue_until}])"
        )
