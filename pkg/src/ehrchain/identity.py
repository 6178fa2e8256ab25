"""Certificate authority, membership validation, and the role model.

Every network interaction is gated by an Ed25519 certificate binding a
subject id, organization, and role to a verification key. Certificates
use a fixed-order, length-prefixed byte encoding so signatures are
stable, and verification is pure so it can run from any thread.
"""

from __future__ import annotations

import enum
import struct
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric import ed25519

from .canonical import pack_fields, sha256_hex, unpack_fields

Clock = Callable[[], int]


def system_clock() -> int:
    return int(time.time())


class Role(str, enum.Enum):
    """One role per identity.

    ADMIN, DOCTOR, and PATIENT are the client-facing roles that drive
    contract access. PEER and CA are infrastructure-only: endorsing
    peers and the authority's self-signed certificate need identities
    too, but no client MSP ever admits them.
    """

    ADMIN = "admin"
    DOCTOR = "doctor"
    PATIENT = "patient"
    PEER = "peer"
    CA = "ca"


CLIENT_ROLES = (Role.ADMIN, Role.DOCTOR, Role.PATIENT)

# Verification rejection reasons.
BAD_SIGNATURE = "bad-signature"
UNTRUSTED_ISSUER = "untrusted-issuer"
ROLE_NOT_ADMITTED = "role-not-admitted"
EXPIRED = "expired"
REVOKED = "revoked"

DEFAULT_CERT_LIFETIME_DAYS = 365


class CertificateRejected(Exception):
    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


class IssuanceError(ValueError):
    """Certificate request refused by the CA."""


@dataclass(frozen=True)
class Identity:
    """Validated principal: the output of membership verification."""

    subject_id: str
    org: str
    role: Role


@dataclass(frozen=True)
class Certificate:
    subject_id: str
    org: str
    role: Role
    public_key: bytes
    issuer_id: str
    serial: int
    not_after: int
    signature: bytes

    def tbs_bytes(self) -> bytes:
        """Bytes covered by the issuer signature, in fixed field order."""
        return pack_fields(
            [
                self.subject_id.encode("utf-8"),
                self.org.encode("utf-8"),
                self.role.value.encode("utf-8"),
                self.public_key,
                self.issuer_id.encode("utf-8"),
                struct.pack(">Q", self.serial),
                struct.pack(">Q", self.not_after),
            ]
        )

    def encode(self) -> bytes:
        return self.tbs_bytes() + pack_fields([self.signature])

    @classmethod
    def decode(cls, data: bytes) -> "Certificate":
        fields = unpack_fields(data, 8)
        return cls(
            subject_id=fields[0].decode("utf-8"),
            org=fields[1].decode("utf-8"),
            role=Role(fields[2].decode("utf-8")),
            public_key=fields[3],
            issuer_id=fields[4].decode("utf-8"),
            serial=struct.unpack(">Q", fields[5])[0],
            not_after=struct.unpack(">Q", fields[6])[0],
            signature=fields[7],
        )

    def digest(self) -> str:
        return sha256_hex(self.encode())

    def verification_key(self) -> ed25519.Ed25519PublicKey:
        return ed25519.Ed25519PublicKey.from_public_bytes(self.public_key)

    def to_document(self) -> dict:
        """Human-readable export for the CLI."""
        return {
            "subject_id": self.subject_id,
            "org": self.org,
            "role": self.role.value,
            "public_key": self.public_key.hex(),
            "issuer_id": self.issuer_id,
            "serial": self.serial,
            "not_after": self.not_after,
            "signature": self.signature.hex(),
            "digest": self.digest(),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "Certificate":
        return cls(
            subject_id=doc["subject_id"],
            org=doc["org"],
            role=Role(doc["role"]),
            public_key=bytes.fromhex(doc["public_key"]),
            issuer_id=doc["issuer_id"],
            serial=int(doc["serial"]),
            not_after=int(doc["not_after"]),
            signature=bytes.fromhex(doc["signature"]),
        )


@dataclass
class MspConfig:
    """Per-org membership rules: trusted issuers and admitted roles."""

    org: str
    trusted_ca_ids: list[str]
    admitted_roles: list[Role]

    def __post_init__(self):
        if not self.trusted_ca_ids:
            raise ValueError("MSP needs at least one trusted CA")


class CertificateAuthority:
    """Issues and revokes role-bound certificates.

    Single-writer: issuance and revocation mutate CA state and are
    expected to be called from one thread at a time. The CA certificate
    is self-signed and carries serial 1.
    """

    def __init__(
        self,
        ca_id: str,
        signing_key: ed25519.Ed25519PrivateKey,
        clock: Clock = system_clock,
        cert_lifetime_days: int = DEFAULT_CERT_LIFETIME_DAYS,
    ):
        self.ca_id = ca_id
        self._signing_key = signing_key
        self.clock = clock
        self.cert_lifetime_days = cert_lifetime_days
        self.issued: dict[int, Certificate] = {}
        self.revoked: set[int] = set()
        self._next_serial = 1
        self.certificate = self._issue_self()

    @classmethod
    def create(
        cls,
        ca_id: str,
        seed: Optional[bytes] = None,
        clock: Clock = system_clock,
        cert_lifetime_days: int = DEFAULT_CERT_LIFETIME_DAYS,
    ) -> "CertificateAuthority":
        """New CA; a 32-byte seed makes key generation reproducible."""
        if seed is not None:
            key = ed25519.Ed25519PrivateKey.from_private_bytes(seed)
        else:
            key = ed25519.Ed25519PrivateKey.generate()
        return cls(ca_id, key, clock=clock, cert_lifetime_days=cert_lifetime_days)

    def public_key_bytes(self) -> bytes:
        from cryptography.hazmat.primitives import serialization

        return self._signing_key.public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )

    def _sign_certificate(
        self, subject_id: str, org: str, role: Role, public_key: bytes, serial: int, not_after: int
    ) -> Certificate:
        unsigned = Certificate(
            subject_id=subject_id,
            org=org,
            role=role,
            public_key=public_key,
            issuer_id=self.ca_id,
            serial=serial,
            not_after=not_after,
            signature=b"",
        )
        signature = self._signing_key.sign(unsigned.tbs_bytes())
        return Certificate(
            subject_id=subject_id,
            org=org,
            role=role,
            public_key=public_key,
            issuer_id=self.ca_id,
            serial=serial,
            not_after=not_after,
            signature=signature,
        )

    def _issue_self(self) -> Certificate:
        serial = self._next_serial
        self._next_serial += 1
        not_after = self.clock() + self.cert_lifetime_days * 86400
        cert = self._sign_certificate(
            self.ca_id, self.ca_id, Role.CA, self.public_key_bytes(), serial, not_after
        )
        self.issued[serial] = cert
        return cert

    def issue(self, subject_id: str, org: str, role: Role, public_key: bytes) -> Certificate:
        """Issue a certificate; serials increase strictly per issuance.

        Rejects when an unexpired, unrevoked certificate already binds
        the same (subject_id, role) pair, so an id cannot be cloned.
        """
        if not subject_id:
            raise IssuanceError("subject_id must be non-empty")
        if not org:
            raise IssuanceError("org must be non-empty")
        if len(public_key) != 32:
            raise IssuanceError("public key must be 32 raw Ed25519 bytes")
        now = self.clock()
        for cert in self.issued.values():
            if (
                cert.subject_id == subject_id
                and cert.role == role
                and cert.serial not in self.revoked
                and now <= cert.not_after
            ):
                raise IssuanceError(
                    f"active certificate already issued for ({subject_id}, {role.value})"
                )
        serial = self._next_serial
        self._next_serial += 1
        not_after = now + self.cert_lifetime_days * 86400
        cert = self._sign_certificate(subject_id, org, role, public_key, serial, not_after)
        self.issued[serial] = cert
        return cert

    def revoke(self, serial: int) -> None:
        if serial not in self.issued:
            raise IssuanceError(f"serial {serial} was never issued")
        self.revoked.add(serial)

    def is_revoked(self, serial: int) -> bool:
        return serial in self.revoked

    def find_active(self, subject_id: str, role: Role) -> Optional[Certificate]:
        now = self.clock()
        for cert in self.issued.values():
            if (
                cert.subject_id == subject_id
                and cert.role == role
                and cert.serial not in self.revoked
                and now <= cert.not_after
            ):
                return cert
        return None

    # -- persistence -------------------------------------------------

    def to_state(self) -> dict:
        from cryptography.hazmat.primitives import serialization

        key_bytes = self._signing_key.private_bytes(
            serialization.Encoding.Raw,
            serialization.PrivateFormat.Raw,
            serialization.NoEncryption(),
        )
        return {
            "ca_id": self.ca_id,
            "private_key": key_bytes.hex(),
            "cert_lifetime_days": self.cert_lifetime_days,
            "next_serial": self._next_serial,
            "issued": {str(s): c.encode().hex() for s, c in self.issued.items()},
            "revoked": sorted(self.revoked),
        }

    @classmethod
    def from_state(cls, state: dict, clock: Clock = system_clock) -> "CertificateAuthority":
        key = ed25519.Ed25519PrivateKey.from_private_bytes(bytes.fromhex(state["private_key"]))
        ca = cls.__new__(cls)
        ca.ca_id = state["ca_id"]
        ca._signing_key = key
        ca.clock = clock
        ca.cert_lifetime_days = state["cert_lifetime_days"]
        ca.issued = {
            int(s): Certificate.decode(bytes.fromhex(enc)) for s, enc in state["issued"].items()
        }
        ca.revoked = set(state["revoked"])
        ca._next_serial = state["next_serial"]
        ca.certificate = ca.issued[1]
        return ca


def verify_certificate(
    msp: MspConfig,
    cert: Certificate,
    now: int,
    ca_registry: dict[str, CertificateAuthority],
) -> Identity:
    """Validate a certificate against an org's membership rules.

    Accepts iff the issuer is trusted and known, the signature verifies
    under the issuer key, the role is admitted, the certificate is
    unexpired at ``now``, and its serial is not revoked. Each failure
    raises CertificateRejected with a distinct reason code.
    """
    if cert.issuer_id not in msp.trusted_ca_ids or cert.issuer_id not in ca_registry:
        raise CertificateRejected(UNTRUSTED_ISSUER, cert.issuer_id)
    ca = ca_registry[cert.issuer_id]
    try:
        ca.certificate.verification_key().verify(cert.signature, cert.tbs_bytes())
    except InvalidSignature:
        raise CertificateRejected(BAD_SIGNATURE, cert.subject_id) from None
    if cert.role not in msp.admitted_roles:
        raise CertificateRejected(ROLE_NOT_ADMITTED, cert.role.value)
    if now > cert.not_after:
        raise CertificateRejected(EXPIRED, cert.subject_id)
    if ca.is_revoked(cert.serial):
        raise CertificateRejected(REVOKED, str(cert.serial))
    return Identity(subject_id=cert.subject_id, org=cert.org, role=cert.role)


def generate_keypair(seed: Optional[bytes] = None) -> tuple[ed25519.Ed25519PrivateKey, bytes]:
    """Ed25519 keypair; returns (private key, raw public bytes)."""
    from cryptography.hazmat.primitives import serialization

    if seed is not None:
        key = ed25519.Ed25519PrivateKey.from_private_bytes(seed)
    else:
        key = ed25519.Ed25519PrivateKey.generate()
    public = key.public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    )
    return key, public
