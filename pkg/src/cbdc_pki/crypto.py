"""Pluggable signature schemes.

Two schemes are registered:

* ``0x00`` -- a deterministic keyed-hash mock. The public key is a hash of
  the private key and a signature is ``HMAC-SHA256(public_key, message)``.
  It honours the sign/verify contract but anyone holding the public key can
  forge, so it is for tests and simulation only.
* ``0x01`` -- Ed25519 (via ``cryptography``).
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

MOCK = 0x00
ED25519 = 0x01


class UnsupportedAlgorithm(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class PublicKey:
    algorithm_id: int
    key: bytes


@dataclass(frozen=True, slots=True)
class Signature:
    algorithm_id: int
    value: bytes


@dataclass(frozen=True, slots=True)
class KeyPair:
    algorithm_id: int
    private: bytes
    public: PublicKey

    def __repr__(self) -> str:
        return f"KeyPair(alg={self.algorithm_id:#04x}, public={self.public.key.hex()[:16]}...)"


class _MockScheme:
    algorithm_id = MOCK
    name = "mock-hmac-sha256"
    key_size = 32
    signature_size = 32

    def keypair(self, seed: bytes) -> KeyPair:
        private = hashlib.sha256(b"cbdc-pki/mock-priv/" + seed).digest()
        public = hashlib.sha256(b"cbdc-pki/mock-pub/" + private).digest()
        return KeyPair(MOCK, private, PublicKey(MOCK, public))

    def sign(self, keypair: KeyPair, message: bytes) -> bytes:
        return hmac.new(keypair.public.key, message, hashlib.sha256).digest()

    def verify(self, key: bytes, message: bytes, signature: bytes) -> bool:
        expected = hmac.new(key, message, hashlib.sha256).digest()
        return hmac.compare_digest(expected, signature)


class _Ed25519Scheme:
    algorithm_id = ED25519
    name = "ed25519"
    key_size = 32
    signature_size = 64

    def keypair(self, seed: bytes) -> KeyPair:
        private = hashlib.sha256(b"cbdc-pki/ed25519/" + seed).digest()
        sk = Ed25519PrivateKey.from_private_bytes(private)
        public = sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        return KeyPair(ED25519, private, PublicKey(ED25519, public))

    def sign(self, keypair: KeyPair, message: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(keypair.private).sign(message)

    def verify(self, key: bytes, message: bytes, signature: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(key).verify(signature, message)
        except (InvalidSignature, ValueError):
            return False
        return True


SCHEMES = {s.algorithm_id: s for s in (_MockScheme(), _Ed25519Scheme())}


def scheme(algorithm_id: int):
    try:
        return SCHEMES[algorithm_id]
    except KeyError:
        raise UnsupportedAlgorithm(f"unsupported algorithm_id {algorithm_id:#04x}") from None


def derive_keypair(label: str, seed: int = 0, algorithm_id: int = MOCK) -> KeyPair:
    """Deterministically derive a key pair from a label and a seed."""
    return scheme(algorithm_id).keypair(f"{seed}/{label}".encode())


def sign(keypair: KeyPair, message: bytes) -> Signature:
    value = scheme(keypair.algorithm_id).sign(keypair, message)
    return Signature(keypair.algorithm_id, value)


def verify(public_key: PublicKey, message: bytes, signature: Signature) -> bool:
    """Return whether ``signature`` over ``message`` verifies under ``public_key``."""
    if public_key.algorithm_id != signature.algorithm_id:
        return False
    s = scheme(public_key.algorithm_id)
    if len(public_key.key) != s.key_size or len(signature.value) != s.signature_size:
        return False
    return s.verify(public_key.key, message, signature.value)
