"""Offline hardware wallet model."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace

from . import crypto
from .authority import (
    EMPTY_REGISTRY,
    AuthorityState,
    RejectReason,
    Verdict,
    verify_chain,
)
from .types import Certificate, Phase, Role, is_active, phase_at


class ManufactureError(Exception):
    pass


class TimestampError(Exception):
    pass


class SignerNotPinned(TimestampError):
    pass


class BadTimestampSignature(TimestampError):
    pass


class InactiveSigner(TimestampError):
    pass


@dataclass(frozen=True)
class Smartcard:
    card_id: str
    manufacturer: str
    manufactured_at: int
    end_of_life: int
    keypair: crypto.KeyPair
    own_chain: tuple[Certificate, ...]
    pinned_roots: frozenset[Certificate]
    pinned_central_register: frozenset[Certificate]
    pinned_timestamp: frozenset[Certificate]
    last_trusted_time: int

    @property
    def certificate(self) -> Certificate:
        return self.own_chain[0]

    def alive_at(self, t: int) -> bool:
        return self.manufactured_at <= t <= self.end_of_life

    @property
    def pinned(self) -> frozenset[Certificate]:
        return self.pinned_roots | self.pinned_central_register | self.pinned_timestamp

    def to_dict(self) -> dict:
        def refs(certs):
            return sorted(c.ref for c in certs)

        return {
            "card_id": self.card_id,
            "manufacturer": self.manufacturer,
            "manufactured_at": self.manufactured_at,
            "end_of_life": self.end_of_life,
            "chain_serials": [c.ref for c in self.own_chain],
            "pinned_serials": {
                "root": refs(self.pinned_roots),
                "central_register": refs(self.pinned_central_register),
                "timestamp": refs(self.pinned_timestamp),
            },
            "last_trusted_time": self.last_trusted_time,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def manufacture(
    state: AuthorityState,
    manufacturer: str,
    generation_index: int,
    t: int,
    card_id: str,
    enforce_ancestors: bool = True,
) -> Smartcard:
    """Personalize a card at tick ``t`` under one Manufacturer CA generation.

    The card pins every Root, Central Register and Timestamp Service
    certificate that exists at ``t``, including ones still in ramp-up.
    """
    try:
        mfr = state.credential(Role.MANUFACTURER_CA, generation_index, manufacturer)
    except KeyError:
        raise ManufactureError(
            f"{manufacturer} has no Manufacturer CA generation {generation_index}"
        ) from None
    if not is_active(mfr.certificate, t):
        raise ManufactureError(
            f"{mfr.holder_ref} is {phase_at(mfr.certificate, t).value} at tick {t}"
        )
    ee = state.issue_end_entity(
        Role.SMARTCARD_EE, card_id, t,
        manufacturer=manufacturer, enforce_ancestors=enforce_ancestors,
    )
    # issue_end_entity picks the newest active generation; insist on ours
    if ee.parent is not mfr:
        raise ManufactureError(
            f"tick {t} is issued by {ee.parent.holder_ref}, not {mfr.holder_ref}"
        )
    own_chain = tuple(ee.chain[:3])
    return Smartcard(
        card_id=card_id,
        manufacturer=manufacturer,
        manufactured_at=t,
        end_of_life=ee.certificate.verify_until,
        keypair=ee.keypair,
        own_chain=own_chain,
        pinned_roots=frozenset(state.existing(Role.ROOT_CA, t)),
        pinned_central_register=frozenset(state.existing(Role.CENTRAL_REGISTER, t)),
        pinned_timestamp=frozenset(state.existing(Role.TIMESTAMP_SERVICE, t)),
        last_trusted_time=t,
    )


@dataclass(frozen=True, slots=True)
class AuthResult:
    accepted: bool
    side: str | None = None
    reason: str | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.accepted

    def __str__(self) -> str:
        if self.accepted:
            return "accept"
        return f"reject(side {self.side}, {self.reason}): {self.detail}"


def _challenge(prover: Smartcard, verifier: Smartcard, t: int) -> bytes:
    return b"cbdc-auth|" + verifier.card_id.encode() + b"|" + prover.card_id.encode() + struct.pack(">Q", t)


def _check_side(me: Smartcard, other: Smartcard, t: int) -> Verdict:
    """``me`` verifies ``other`` at ``t``."""
    verdict = verify_chain(other.own_chain, me.pinned_roots, t, EMPTY_REGISTRY)
    if not verdict:
        return verdict
    proof = crypto.sign(other.keypair, _challenge(other, me, t))
    if not crypto.verify(other.certificate.public_key, _challenge(other, me, t), proof):
        return Verdict(False, RejectReason.BAD_SIGNATURE, "challenge response does not verify")
    return verdict


def mutual_authenticate(a: Smartcard, b: Smartcard, t: int | None = None) -> AuthResult:
    """Offline mutual authentication; no revocation data is consulted.

    With ``t=None`` each card uses its own trusted clock.
    """
    ta = a.last_trusted_time if t is None else t
    tb = b.last_trusted_time if t is None else t
    for side, card, now in (("a", a, ta), ("b", b, tb)):
        if now > card.end_of_life:
            return AuthResult(False, side, RejectReason.EXPIRED.value, f"{card.card_id} past end of life")
        if now < card.manufactured_at:
            return AuthResult(False, side, RejectReason.NOT_YET_VALID.value, f"{card.card_id} not yet manufactured")
    # side names the card whose chain was rejected
    v = _check_side(a, b, ta)
    if not v:
        return AuthResult(False, "b", v.reason.value, v.detail)
    v = _check_side(b, a, tb)
    if not v:
        return AuthResult(False, "a", v.reason.value, v.detail)
    return AuthResult(True)


def validate_central_register_signature(
    card: Smartcard, signer_cert: Certificate, t: int
) -> AuthResult:
    if signer_cert not in card.pinned_central_register:
        return AuthResult(False, None, "untrusted-signer", f"{signer_cert.ref} is not pinned on {card.card_id}")
    phase = phase_at(signer_cert, t)
    if phase is not Phase.ACTIVE:
        return AuthResult(False, None, "inactive-signer", f"{signer_cert.ref} is {phase.value} at {t}")
    return AuthResult(True)


@dataclass(frozen=True, slots=True)
class SignedTimestamp:
    tick: int
    signer_ref: str
    signer_serial: int
    signature: crypto.Signature

    @staticmethod
    def message(tick: int) -> bytes:
        return b"cbdc-ts|" + struct.pack(">Q", tick)

    @classmethod
    def create(cls, keypair: crypto.KeyPair, cert: Certificate, tick: int) -> SignedTimestamp:
        return cls(tick, cert.holder_ref, cert.serial, crypto.sign(keypair, cls.message(tick)))


def advance_trusted_time(card: Smartcard, stamp: SignedTimestamp) -> Smartcard:
    """Return the card with its monotone clock moved to ``stamp.tick``."""
    signer = next(
        (
            c
            for c in card.pinned_timestamp
            if c.holder_ref == stamp.signer_ref and c.serial == stamp.signer_serial
        ),
        None,
    )
    if signer is None:
        raise SignerNotPinned(f"{stamp.signer_ref}#{stamp.signer_serial} is not pinned on {card.card_id}")
    if not crypto.verify(signer.public_key, SignedTimestamp.message(stamp.tick), stamp.signature):
        raise BadTimestampSignature(f"timestamp for tick {stamp.tick} does not verify")
    if not is_active(signer, stamp.tick):
        raise InactiveSigner(
            f"{signer.ref} is {phase_at(signer, stamp.tick).value} at asserted tick {stamp.tick}"
        )
    if stamp.tick <= card.last_trusted_time:
        return card
    return replace(card, last_trusted_time=stamp.tick)
