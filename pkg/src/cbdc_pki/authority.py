"""Certificate issuance along a schedule, chain verification and revocation."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import crypto
from .planner import (
    Generation,
    NoActiveIssuer,
    RolloverProfile,
    Schedule,
    table1_minimums,
    validate_schedule,
)
from .types import (
    END_ENTITY_ROLES,
    Certificate,
    Phase,
    Role,
    depth,
    may_issue,
    phase_at,
)

ROLE_PREFIX = {
    Role.ROOT_CA: "root",
    Role.HARDWARE_CA: "hwca",
    Role.MANUFACTURER_CA: "mfr",
    Role.SMARTCARD_EE: "card",
    Role.OPERATIONAL_CA: "opca",
    Role.CENTRAL_REGISTER: "creg",
    Role.TIMESTAMP_SERVICE: "tss",
    Role.MINTING: "mint",
    Role.FINANCIAL_CA: "finca",
    Role.FSP: "fsp",
}


class AuthorityError(Exception):
    pass


class InvalidScheduleError(AuthorityError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n  ".join(str(v) for v in self.violations[:10])
        super().__init__(f"schedule has {len(self.violations)} violation(s):\n  {lines}")


class AncestorExpiryError(AuthorityError):
    """An end-entity window would outlive an ancestor (a planner bug)."""


class UnknownCertificate(AuthorityError, KeyError):
    pass


class RejectReason(str, enum.Enum):
    UNTRUSTED_ROOT = "untrusted-root"
    BAD_SIGNATURE = "bad-signature"
    ROLE_VIOLATION = "role-violation"
    REVOKED = "revoked"
    NOT_YET_VALID = "not-yet-valid"
    EXPIRED = "expired"


_PRIORITY = {reason: i for i, reason in enumerate(RejectReason)}


@dataclass(frozen=True, slots=True)
class Verdict:
    accepted: bool
    reason: RejectReason | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.accepted

    def __str__(self) -> str:
        if self.accepted:
            return "accept"
        return f"reject({self.reason.value}): {self.detail}"


ACCEPT = Verdict(True)


@dataclass(frozen=True, slots=True)
class RegistrySnapshot:
    entries: frozenset[tuple[str, int]] = frozenset()
    as_of: int | None = None

    def __contains__(self, cert: Certificate) -> bool:
        return (cert.issuer_ref, cert.serial) in self.entries

    def to_dict(self) -> dict:
        return {
            "as_of": self.as_of,
            "entries": [list(e) for e in sorted(self.entries)],
        }


EMPTY_REGISTRY = RegistrySnapshot()


@dataclass
class RevocationRegistry:
    """Organizational revocation list; entries are never removed."""

    revoked: dict[tuple[str, int], int] = field(default_factory=dict)
    last_sync: dict[str, int] = field(default_factory=dict)

    def revoke(self, issuer_ref: str, serial: int, t: int) -> None:
        # keep the earliest tick so repeated revocations are idempotent
        key = (issuer_ref, serial)
        self.revoked[key] = min(t, self.revoked.get(key, t))

    def snapshot(self, t: int) -> RegistrySnapshot:
        return RegistrySnapshot(
            frozenset(k for k, tick in self.revoked.items() if tick <= t), as_of=t
        )

    def sync(self, party: str, t: int) -> RegistrySnapshot:
        self.last_sync[party] = t
        return self.snapshot(t)

    def to_dict(self) -> dict:
        return {
            "entries": [
                [issuer, serial, tick] for (issuer, serial), tick in sorted(self.revoked.items())
            ],
            "last_sync": dict(sorted(self.last_sync.items())),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


@dataclass(eq=False)
class Credential:
    """A certificate together with its key pair and issuing credential."""

    role: Role
    index: int | None
    keypair: crypto.KeyPair
    certificate: Certificate
    parent: Credential | None = None

    @property
    def holder_ref(self) -> str:
        return self.certificate.holder_ref

    @property
    def chain(self) -> list[Certificate]:
        """Certificates from this one up to and including the root."""
        out = []
        cred: Credential | None = self
        while cred is not None:
            out.append(cred.certificate)
            cred = cred.parent
        return out

    def __repr__(self) -> str:
        return f"Credential({self.certificate!r})"


def generation_holder(role: Role, index: int, name: str | None = None) -> str:
    return f"{name or ROLE_PREFIX[role]}-g{index}"


def _sign_cert(cert: Certificate, keypair: crypto.KeyPair) -> Certificate:
    sig = crypto.sign(keypair, cert.tbs)
    return Certificate(
        serial=cert.serial,
        role=cert.role,
        holder_ref=cert.holder_ref,
        issuer_ref=cert.issuer_ref,
        public_key=cert.public_key,
        verify_from=cert.verify_from,
        verify_until=cert.verify_until,
        issue_from=cert.issue_from,
        issue_until=cert.issue_until,
        signature=sig,
    )


class AuthorityState:
    """Keys, certificates and revocation state for one schedule.

    Build it with :func:`materialize`. Mutating methods (issuance,
    revocation) are meant to be called from a single owner.
    """

    def __init__(
        self,
        schedule: Schedule,
        profile: RolloverProfile,
        manufacturers: Sequence[str] = ("mfr",),
        seed: int = 0,
        algorithm_id: int = crypto.MOCK,
    ):
        if not manufacturers:
            raise ValueError("at least one manufacturer is required")
        if len(set(manufacturers)) != len(manufacturers):
            raise ValueError("manufacturer names must be unique")
        self.schedule = schedule
        self.profile = profile
        self.manufacturers = tuple(manufacturers)
        self.seed = seed
        self.algorithm_id = algorithm_id
        self.credentials: dict[tuple[Role, int, str], Credential] = {}
        self.issued: dict[tuple[str, int], Certificate] = {}
        self.by_holder: dict[str, Credential] = {}
        self.registry = RevocationRegistry()
        self._serials: dict[str, int] = {}

    # -- lookup ------------------------------------------------------------

    def credential(self, role: Role, index: int, manufacturer: str | None = None) -> Credential:
        name = ""
        if role is Role.MANUFACTURER_CA:
            name = manufacturer or self.manufacturers[0]
        return self.credentials[(role, index, name)]

    def generation_credentials(self, role: Role) -> list[Credential]:
        return [c for (r, _, _), c in self.credentials.items() if r is role]

    def certificates(self, role: Role | None = None) -> list[Certificate]:
        return [c.certificate for c in self.credentials.values() if role in (None, c.role)]

    def existing(self, role: Role, t: int) -> list[Certificate]:
        """Generation certificates of ``role`` that exist (any phase) at ``t``."""
        return [
            c.certificate
            for c in self.generation_credentials(role)
            if c.certificate.verify_from <= t <= c.certificate.verify_until
        ]

    def active_credential(
        self, role: Role, t: int, manufacturer: str | None = None
    ) -> Credential | None:
        gen = self.schedule.active_generation(role, t)
        if gen is None:
            return None
        return self.credential(role, gen.index, manufacturer)

    # -- issuance ----------------------------------------------------------

    def _next_serial(self, issuer_ref: str) -> int:
        serial = self._serials.get(issuer_ref, 0) + 1
        self._serials[issuer_ref] = serial
        return serial

    def _record(self, cred: Credential) -> Credential:
        cert = cred.certificate
        self.issued[(cert.issuer_ref, cert.serial)] = cert
        return cred

    def _issue(
        self,
        role: Role,
        index: int | None,
        holder_ref: str,
        parent: Credential | None,
        windows: tuple[int, int, int, int],
        key_label: str,
    ) -> Credential:
        keypair = crypto.derive_keypair(key_label, self.seed, self.algorithm_id)
        issuer_ref = parent.holder_ref if parent else holder_ref
        verify_from, issue_from, issue_until, verify_until = windows
        unsigned = Certificate(
            serial=self._next_serial(issuer_ref),
            role=role,
            holder_ref=holder_ref,
            issuer_ref=issuer_ref,
            public_key=keypair.public,
            verify_from=verify_from,
            verify_until=verify_until,
            issue_from=issue_from,
            issue_until=issue_until,
        )
        signer = parent.keypair if parent else keypair
        cred = Credential(role, index, keypair, _sign_cert(unsigned, signer), parent)
        return self._record(cred)

    def _materialize_generation(self, role: Role, gen: Generation, name: str) -> None:
        holder = generation_holder(role, gen.index, name or None)
        parent = None
        if role.parent is not None:
            parent_name = ""
            parent = self.credentials[(role.parent, gen.parent_index, parent_name)]
        cred = self._issue(
            role,
            gen.index,
            holder,
            parent,
            (gen.verify_from, gen.issue_from, gen.issue_until, gen.verify_until),
            key_label=holder,
        )
        self.credentials[(role, gen.index, name)] = cred
        self.by_holder[holder] = cred

    def issue_end_entity(
        self,
        role: Role,
        holder_ref: str,
        t: int,
        manufacturer: str | None = None,
        enforce_ancestors: bool = True,
    ) -> Credential:
        """Issue an end-entity certificate at ``t`` from the newest active issuer.

        Windows follow the profile for ``role`` starting at ``t``. The
        returned credential's :attr:`~Credential.chain` runs EE to Root.
        ``enforce_ancestors=False`` skips the ancestor-expiry check so a
        simulator can observe the consequences of a faulty schedule.
        """
        if role not in END_ENTITY_ROLES:
            raise ValueError(f"{role.value} is not an end-entity role")
        parent_role = role.parent
        assert parent_role is not None
        parent = self.active_credential(parent_role, t, manufacturer)
        if parent is None:
            raise NoActiveIssuer(f"no active {parent_role.value} at tick {t}")
        plan = self.profile[role].as_plan()
        windows = (
            t,
            t + plan.ramp_up,
            t + plan.ramp_up + plan.active,
            t + plan.total_validity,
        )
        for ancestor in parent.chain if enforce_ancestors else ():
            if windows[3] > ancestor.verify_until:
                raise AncestorExpiryError(
                    f"{role.value} issued at {t} would verify until {windows[3]}, "
                    f"but {ancestor.holder_ref} expires at {ancestor.verify_until}"
                )
        serial_hint = self._serials.get(parent.holder_ref, 0) + 1
        return self._issue(
            role, None, holder_ref, parent, windows,
            key_label=f"{holder_ref}/{parent.holder_ref}/{serial_hint}",
        )

    # -- revocation ---------------------------------------------------------

    def revoke(self, issuer_ref: str, serial: int, t: int) -> RevocationRegistry:
        if (issuer_ref, serial) not in self.issued:
            raise UnknownCertificate(f"no certificate {issuer_ref}#{serial}")
        self.registry.revoke(issuer_ref, serial, t)
        return self.registry

    def sync_party(self, party_id: str, t: int) -> RegistrySnapshot:
        return self.registry.sync(party_id, t)


def materialize(
    schedule: Schedule,
    profile: RolloverProfile | None = None,
    *,
    manufacturers: Sequence[str] = ("mfr",),
    seed: int = 0,
    algorithm_id: int = crypto.MOCK,
    check: bool = True,
) -> AuthorityState:
    """Create keys and certificates for every generation of ``schedule``.

    Each Manufacturer CA generation yields one certificate per manufacturer.
    Root generations are self-signed. With ``check=False`` invalid
    schedules are materialized as-is (used to simulate faulty plans).
    """
    profile = profile or table1_minimums(schedule.u)
    if check:
        violations = validate_schedule(schedule, profile)
        if violations:
            raise InvalidScheduleError(violations)
    state = AuthorityState(schedule, profile, manufacturers, seed, algorithm_id)
    order = sorted(
        schedule.iter_generations(),
        key=lambda rg: (depth(rg[0]), rg[1].start, list(Role).index(rg[0]), rg[1].index),
    )
    for role, gen in order:
        names = state.manufacturers if role is Role.MANUFACTURER_CA else ("",)
        for name in names:
            try:
                state._materialize_generation(role, gen, name)
            except KeyError:
                raise AuthorityError(
                    f"{role.value} generation {gen.index} references missing parent "
                    f"generation {gen.parent_index}"
                ) from None
    return state


# -- verification ---------------------------------------------------------


def _path(chain: Sequence[Certificate], anchors: Iterable[Certificate]):
    """Append the matching trust anchor; return (path, problem)."""
    anchors = list(anchors)
    last = chain[-1]
    if last.is_self_signed:
        if last not in anchors:
            return list(chain), Verdict(
                False, RejectReason.UNTRUSTED_ROOT, f"{last.ref} is not a trust anchor"
            )
        return list(chain), None
    matches = [a for a in anchors if a.holder_ref == last.issuer_ref]
    if not matches:
        return list(chain), Verdict(
            False, RejectReason.UNTRUSTED_ROOT, f"no trust anchor named {last.issuer_ref!r}"
        )
    for anchor in matches:
        if crypto.verify(anchor.public_key, last.tbs, last.signature):
            return [*chain, anchor], None
    return [*chain, matches[0]], None


def _link_problems(child: Certificate, parent: Certificate) -> list[Verdict]:
    out = []
    if child.issuer_ref != parent.holder_ref:
        out.append(
            Verdict(
                False, RejectReason.BAD_SIGNATURE,
                f"{child.ref} names issuer {child.issuer_ref!r}, next is {parent.holder_ref!r}",
            )
        )
    elif not crypto.verify(parent.public_key, child.tbs, child.signature):
        out.append(
            Verdict(False, RejectReason.BAD_SIGNATURE, f"{child.ref} signature does not verify")
        )
    if not may_issue(parent.role, child.role):
        out.append(
            Verdict(
                False, RejectReason.ROLE_VIOLATION,
                f"{parent.role.value} may not issue {child.role.value}",
            )
        )
    signed_in = phase_at(parent, child.verify_from)
    if signed_in is not Phase.ACTIVE:
        out.append(
            Verdict(
                False, RejectReason.ROLE_VIOLATION,
                f"{child.ref} created at {child.verify_from} while {parent.ref} "
                f"was {signed_in.value}",
            )
        )
    return out


def verify_chain(
    chain: Sequence[Certificate],
    trust_anchors: Iterable[Certificate],
    t: int,
    registry: RegistrySnapshot = EMPTY_REGISTRY,
) -> Verdict:
    """Verify a leaf-first chain at tick ``t``.

    The chain may end in a self-signed Root (which must be one of the
    anchors) or just below it (the anchor is looked up by issuer name).
    Every problem is collected and the most severe one is reported, so the
    verdict does not depend on which certificate is inspected first.
    """
    if not chain:
        return Verdict(False, RejectReason.UNTRUSTED_ROOT, "empty chain")
    path, problem = _path(chain, trust_anchors)
    problems = [problem] if problem is not None else []
    for child, parent in zip(path, path[1:]):
        problems.extend(_link_problems(child, parent))
    top = path[-1]
    if top.is_self_signed and not crypto.verify(top.public_key, top.tbs, top.signature):
        problems.append(
            Verdict(False, RejectReason.BAD_SIGNATURE, f"{top.ref} self-signature does not verify")
        )
    elif not top.is_self_signed and problem is None:
        problems.append(
            Verdict(False, RejectReason.UNTRUSTED_ROOT, f"{top.ref} is not a self-signed root")
        )
    for cert in path:
        if cert in registry:
            problems.append(Verdict(False, RejectReason.REVOKED, f"{cert.ref} is revoked"))
        phase = phase_at(cert, t)
        if phase in (Phase.BEFORE_VALIDITY, Phase.RAMP_UP):
            problems.append(
                Verdict(
                    False, RejectReason.NOT_YET_VALID, f"{cert.ref} is {phase.value} at {t}"
                )
            )
        elif phase is Phase.EXPIRED:
            problems.append(
                Verdict(
                    False, RejectReason.EXPIRED,
                    f"{cert.ref} expired at {cert.verify_until}, checked at {t}",
                )
            )
    if not problems:
        return ACCEPT
    return min(problems, key=lambda v: _PRIORITY[v.reason])
