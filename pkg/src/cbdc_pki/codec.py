"""Binary TLV codec for compact card-verifiable certificates.

Every field is ``tag (1 octet) | length (2 octets, big-endian) | value``.
All fields are mandatory and appear once, in ascending tag order, with the
signature last:

====  ==============  ==========================================
tag   field           value
====  ==============  ==========================================
0x01  version         1 octet, always 0x01
0x02  serial          8 octets
0x03  role            1 octet role code
0x04  holder_ref      UTF-8, at most 32 octets
0x05  issuer_ref      UTF-8, at most 32 octets
0x06  public key      algorithm id (1 octet) + key octets
0x07  verify_from     8 octets
0x08  verify_until    8 octets
0x09  issue_from      8 octets
0x0A  issue_until     8 octets
0x7F  signature       algorithm id (1 octet) + signature octets
====  ==============  ==========================================

The signature covers every byte before the signature field.
"""

from __future__ import annotations

import struct

from .crypto import PublicKey, Signature, UnsupportedAlgorithm, scheme
from .types import MAX_REF_OCTETS, Certificate, Role

VERSION = 0x01

TAG_VERSION = 0x01
TAG_SERIAL = 0x02
TAG_ROLE = 0x03
TAG_HOLDER = 0x04
TAG_ISSUER = 0x05
TAG_PUBLIC_KEY = 0x06
TAG_VERIFY_FROM = 0x07
TAG_VERIFY_UNTIL = 0x08
TAG_ISSUE_FROM = 0x09
TAG_ISSUE_UNTIL = 0x0A
TAG_SIGNATURE = 0x7F

TAGS = (
    TAG_VERSION,
    TAG_SERIAL,
    TAG_ROLE,
    TAG_HOLDER,
    TAG_ISSUER,
    TAG_PUBLIC_KEY,
    TAG_VERIFY_FROM,
    TAG_VERIFY_UNTIL,
    TAG_ISSUE_FROM,
    TAG_ISSUE_UNTIL,
    TAG_SIGNATURE,
)

TAG_NAMES = {
    TAG_VERSION: "version",
    TAG_SERIAL: "serial",
    TAG_ROLE: "role",
    TAG_HOLDER: "holder_ref",
    TAG_ISSUER: "issuer_ref",
    TAG_PUBLIC_KEY: "public_key",
    TAG_VERIFY_FROM: "verify_from",
    TAG_VERIFY_UNTIL: "verify_until",
    TAG_ISSUE_FROM: "issue_from",
    TAG_ISSUE_UNTIL: "issue_until",
    TAG_SIGNATURE: "signature",
}

_HEADER = struct.Struct(">BH")
_U64 = struct.Struct(">Q")


class EncodeError(ValueError):
    pass


class MalformedCertificate(ValueError):
    """Raised by :func:`decode`; ``offset`` points at the offending byte."""

    def __init__(self, offset: int, reason: str, detail: str = ""):
        msg = f"malformed certificate at offset {offset}: {reason}"
        super().__init__(f"{msg} ({detail})" if detail else msg)
        self.offset = offset
        self.reason = reason
        self.detail = detail


def _tlv(tag: int, value: bytes) -> bytes:
    return _HEADER.pack(tag, len(value)) + value


def _ref(text: str, name: str) -> bytes:
    raw = text.encode("utf-8")
    if len(raw) > MAX_REF_OCTETS:
        raise EncodeError(f"{name} is {len(raw)} octets, limit is {MAX_REF_OCTETS}")
    return raw


def _keyed(algorithm_id: int, data: bytes, size_attr: str) -> bytes:
    try:
        s = scheme(algorithm_id)
    except UnsupportedAlgorithm as exc:
        raise EncodeError(str(exc)) from None
    if len(data) != getattr(s, size_attr):
        raise EncodeError(f"{s.name} expects {getattr(s, size_attr)} octets, got {len(data)}")
    return bytes([algorithm_id]) + data


def encode_tbs(cert: Certificate) -> bytes:
    """Encode every field except the signature."""
    return b"".join(
        (
            _tlv(TAG_VERSION, bytes([VERSION])),
            _tlv(TAG_SERIAL, _U64.pack(cert.serial)),
            _tlv(TAG_ROLE, bytes([cert.role.code])),
            _tlv(TAG_HOLDER, _ref(cert.holder_ref, "holder_ref")),
            _tlv(TAG_ISSUER, _ref(cert.issuer_ref, "issuer_ref")),
            _tlv(
                TAG_PUBLIC_KEY,
                _keyed(cert.public_key.algorithm_id, cert.public_key.key, "key_size"),
            ),
            _tlv(TAG_VERIFY_FROM, _U64.pack(cert.verify_from)),
            _tlv(TAG_VERIFY_UNTIL, _U64.pack(cert.verify_until)),
            _tlv(TAG_ISSUE_FROM, _U64.pack(cert.issue_from)),
            _tlv(TAG_ISSUE_UNTIL, _U64.pack(cert.issue_until)),
        )
    )


def encode(cert: Certificate) -> bytes:
    sig = _keyed(cert.signature.algorithm_id, cert.signature.value, "signature_size")
    return cert.tbs + _tlv(TAG_SIGNATURE, sig)


def _split(data: bytes) -> list[tuple[int, int, bytes]]:
    """Split into (offset, tag, value) triples, enforcing canonical tag order."""
    fields = []
    pos = 0
    expected = iter(TAGS)
    prev = -1
    while pos < len(data):
        if pos + _HEADER.size > len(data):
            raise MalformedCertificate(pos, "truncated header")
        tag, length = _HEADER.unpack_from(data, pos)
        if tag not in TAG_NAMES:
            raise MalformedCertificate(pos, f"unknown tag {tag:#04x}")
        if tag == prev:
            raise MalformedCertificate(pos, f"duplicate tag {tag:#04x}")
        want = next(expected, None)
        if want is None:
            raise MalformedCertificate(pos, "trailing bytes")
        if tag != want:
            raise MalformedCertificate(
                pos, "tag order", f"expected {want:#04x}, found {tag:#04x}"
            )
        start = pos + _HEADER.size
        if start + length > len(data):
            raise MalformedCertificate(pos, f"truncated value for tag {tag:#04x}")
        fields.append((pos, tag, data[start : start + length]))
        pos = start + length
        prev = tag
        if tag == TAG_SIGNATURE and pos != len(data):
            raise MalformedCertificate(pos, "trailing bytes")
    if len(fields) != len(TAGS):
        missing = TAGS[len(fields)]
        raise MalformedCertificate(len(data), f"truncated: missing tag {missing:#04x}")
    return fields


def _fixed(offset: int, value: bytes, size: int, name: str) -> bytes:
    if len(value) != size:
        raise MalformedCertificate(offset, f"{name} must be {size} octets, got {len(value)}")
    return value


def _text(offset: int, value: bytes, name: str) -> str:
    if len(value) > MAX_REF_OCTETS:
        raise MalformedCertificate(offset, f"{name} longer than {MAX_REF_OCTETS} octets")
    try:
        return value.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedCertificate(offset, f"{name} is not valid UTF-8") from None


def _alg(offset: int, value: bytes, size_attr: str, name: str) -> tuple[int, bytes]:
    if not value:
        raise MalformedCertificate(offset, f"empty {name}")
    try:
        s = scheme(value[0])
    except UnsupportedAlgorithm as exc:
        raise MalformedCertificate(offset, str(exc)) from None
    body = value[1:]
    if len(body) != getattr(s, size_attr):
        raise MalformedCertificate(offset, f"{name} length mismatch for {s.name}")
    return value[0], body


def decode(data: bytes) -> Certificate:
    """Decode canonical TLV bytes; raises :class:`MalformedCertificate`."""
    data = bytes(data)
    fields = _split(data)
    values: dict[int, object] = {}
    for offset, tag, value in fields:
        if tag == TAG_VERSION:
            if value != bytes([VERSION]):
                raise MalformedCertificate(offset, "unsupported version")
        elif tag == TAG_ROLE:
            code = _fixed(offset, value, 1, "role")[0]
            try:
                values[tag] = Role.from_code(code)
            except KeyError:
                raise MalformedCertificate(offset, f"unknown role code {code:#04x}") from None
        elif tag in (TAG_HOLDER, TAG_ISSUER):
            values[tag] = _text(offset, value, TAG_NAMES[tag])
        elif tag == TAG_PUBLIC_KEY:
            values[tag] = PublicKey(*_alg(offset, value, "key_size", "public key"))
        elif tag == TAG_SIGNATURE:
            values[tag] = Signature(*_alg(offset, value, "signature_size", "signature"))
        else:
            values[tag] = _U64.unpack(_fixed(offset, value, 8, TAG_NAMES[tag]))[0]
    try:
        cert = Certificate(
            serial=values[TAG_SERIAL],
            role=values[TAG_ROLE],
            holder_ref=values[TAG_HOLDER],
            issuer_ref=values[TAG_ISSUER],
            public_key=values[TAG_PUBLIC_KEY],
            verify_from=values[TAG_VERIFY_FROM],
            verify_until=values[TAG_VERIFY_UNTIL],
            issue_from=values[TAG_ISSUE_FROM],
            issue_until=values[TAG_ISSUE_UNTIL],
            signature=values[TAG_SIGNATURE],
        )
    except ValueError as exc:
        offset = next(o for o, t, _ in fields if t == TAG_VERIFY_FROM)
        raise MalformedCertificate(offset, str(exc)) from None
    return cert


def hexdump(data: bytes, width: int = 16) -> str:
    lines = []
    for off in range(0, len(data), width):
        chunk = data[off : off + width]
        hexes = " ".join(f"{b:02x}" for b in chunk)
        text = "".join(chr(b) if 32 <= b < 127 else "." for b in chunk)
        lines.append(f"{off:08x}  {hexes:<{width * 3}} {text}")
    return "\n".join(lines)
