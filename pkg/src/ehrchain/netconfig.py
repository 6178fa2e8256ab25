"""Network definition file, bootstrap, and the on-disk data directory.

A YAML file names the orgs, their peers and admitted roles, the root
CA, the channel parameters, the bootstrap admin, and the gateway bind.
``bootstrap`` turns that file into a data directory holding the CA
state, the enrolled wallets, the block log, and a world-state snapshot;
``open_network`` rebuilds a running network from it.
"""

from __future__ import annotations

import dataclasses
import json
import os
import random
import threading
import time
from dataclasses import dataclass
from typing import Optional

import yaml
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric import ed25519

from .chaincode import EhrChaincode, LifecycleChaincode, NoopChaincode
from .chaincode.ehr import hash_password
from .errors import ChaincodeError, EndorsementRejected
from .identity import (
    CLIENT_ROLES,
    Certificate,
    CertificateAuthority,
    Clock,
    MspConfig,
    Role,
    generate_keypair,
    system_clock,
)
from .ledger import VALID, Chain
from .txflow import ChannelConfig, ClientIdentity, EndorsementPolicy, Network, Peer

CONFIG_FILE = "network.yaml"
CA_FILE = "ca.json"
CHAIN_LOG = "chain.log"
STATE_FILE = "state.json"
IDENTITIES_DIR = "identities"
GATEWAY_FILE = "gateway.json"
ADMIN_AUTH_FILE = "admin_auth.json"


class ConfigError(Exception):
    """Definition file rejected; ``errors`` itemizes every defect found."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


class AlreadyInitializedError(Exception):
    """The data directory already holds a chain."""


class BootstrapError(Exception):
    """Bootstrap produced an invalid transaction; the directory is suspect."""


@dataclass(frozen=True)
class OrgConfig:
    name: str
    peer_id: str
    admitted_roles: tuple[Role, ...]


@dataclass(frozen=True)
class CaConfig:
    ca_id: str
    seed: Optional[bytes] = None


@dataclass(frozen=True)
class AdminConfig:
    # password is only needed at bootstrap; the copy of the config kept
    # in the data dir carries None so the plaintext never hits disk
    id: str
    password: Optional[str] = None


@dataclass(frozen=True)
class GatewayConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    token_ttl_seconds: int = 1800


@dataclass(frozen=True)
class NetworkConfig:
    network_name: str
    ca: CaConfig
    orgs: tuple[OrgConfig, ...]
    channel: ChannelConfig
    admin: AdminConfig
    gateway: GatewayConfig
    genesis_time: Optional[int] = None

    def org_for_role(self, role: Role) -> OrgConfig:
        for org in self.orgs:
            if role in org.admitted_roles:
                return org
        raise ConfigError([f"no org admits the {role.value} role"])

    def to_dict(self) -> dict:
        data: dict = {
            "network_name": self.network_name,
            "ca": {"ca_id": self.ca.ca_id},
            "orgs": [
                {
                    "name": org.name,
                    "peer_id": org.peer_id,
                    "admitted_roles": [role.value for role in org.admitted_roles],
                }
                for org in self.orgs
            ],
            "channel": {
                "channel_id": self.channel.channel_id,
                "endorsement_policy": self.channel.endorsement_policy.to_dict(),
                "max_block_txs": self.channel.max_block_txs,
                "block_timeout_ms": self.channel.block_timeout_ms,
            },
            "admin": (
                {"id": self.admin.id}
                if self.admin.password is None
                else {"id": self.admin.id, "password": self.admin.password}
            ),
            "gateway": {
                "host": self.gateway.host,
                "port": self.gateway.port,
                "token_ttl_seconds": self.gateway.token_ttl_seconds,
            },
        }
        if self.ca.seed is not None:
            data["ca"]["seed"] = self.ca.seed.hex()
        if self.genesis_time is not None:
            data["genesis_time"] = self.genesis_time
        return data

    @classmethod
    def from_dict(cls, raw: dict) -> "NetworkConfig":
        errors: list[str] = []
        if not isinstance(raw, dict):
            raise ConfigError(["definition must be a mapping"])

        network_name = raw.get("network_name")
        if not isinstance(network_name, str) or not network_name:
            errors.append("network_name must be a non-empty string")

        genesis_time = raw.get("genesis_time")
        if genesis_time is not None and not isinstance(genesis_time, int):
            errors.append("genesis_time must be an integer (unix seconds)")

        ca_raw = raw.get("ca") or {}
        ca_id = ca_raw.get("ca_id")
        seed: Optional[bytes] = None
        if not isinstance(ca_id, str) or not ca_id:
            errors.append("ca.ca_id must be a non-empty string")
        if "seed" in ca_raw:
            try:
                seed = bytes.fromhex(ca_raw["seed"])
            except (TypeError, ValueError):
                seed = None
                errors.append("ca.seed must be hex")
            if seed is not None and len(seed) != 32:
                errors.append("ca.seed must be 32 bytes of hex")
                seed = None

        orgs: list[OrgConfig] = []
        raw_orgs = raw.get("orgs")
        if not isinstance(raw_orgs, list) or not raw_orgs:
            errors.append("orgs must be a non-empty list")
            raw_orgs = []
        for index, item in enumerate(raw_orgs):
            where = f"orgs[{index}]"
            if not isinstance(item, dict):
                errors.append(f"{where} must be a mapping")
                continue
            name = item.get("name")
            peer_id = item.get("peer_id")
            if not isinstance(name, str) or not name:
                errors.append(f"{where}.name must be a non-empty string")
                continue
            if not isinstance(peer_id, str) or not peer_id:
                errors.append(f"{where}.peer_id must be a non-empty string")
                continue
            roles: list[Role] = []
            raw_roles = item.get("admitted_roles")
            if not isinstance(raw_roles, list) or not raw_roles:
                errors.append(f"{where}.admitted_roles must be a non-empty list")
                raw_roles = []
            for value in raw_roles:
                try:
                    role = Role(value)
                except ValueError:
                    errors.append(f"{where}: unknown role {value!r}")
                    continue
                if role not in CLIENT_ROLES:
                    errors.append(f"{where}: {value!r} is not a client role")
                    continue
                roles.append(role)
            orgs.append(OrgConfig(name=name, peer_id=peer_id, admitted_roles=tuple(roles)))

        names = [org.name for org in orgs]
        if len(set(names)) != len(names):
            errors.append("org names must be unique")
        peer_ids = [org.peer_id for org in orgs]
        if len(set(peer_ids)) != len(peer_ids):
            errors.append("peer ids must be unique")
        if orgs and not any(Role.ADMIN in org.admitted_roles for org in orgs):
            errors.append("some org must admit the admin role")

        channel: Optional[ChannelConfig] = None
        channel_raw = raw.get("channel") or {}
        if not isinstance(channel_raw, dict):
            errors.append("channel must be a mapping")
            channel_raw = {}
        if orgs and not errors:
            try:
                channel = ChannelConfig(
                    channel_id=channel_raw.get("channel_id", ""),
                    orgs=tuple(names),
                    endorsement_policy=EndorsementPolicy.from_dict(
                        channel_raw.get("endorsement_policy") or {"rule": "all"}
                    ),
                    max_block_txs=channel_raw.get("max_block_txs", 10),
                    block_timeout_ms=channel_raw.get("block_timeout_ms", 500),
                )
            except (ValueError, KeyError, TypeError) as exc:
                errors.append(f"channel: {exc}")

        admin_raw = raw.get("admin") or {}
        admin_id = admin_raw.get("id")
        admin_password = admin_raw.get("password")
        if not isinstance(admin_id, str) or not admin_id:
            errors.append("admin.id must be a non-empty string")
        if admin_password is not None and (
            not isinstance(admin_password, str) or not admin_password
        ):
            errors.append("admin.password must be a non-empty string when present")

        gateway_raw = raw.get("gateway") or {}
        host = gateway_raw.get("host", "127.0.0.1")
        port = gateway_raw.get("port", 8000)
        ttl = gateway_raw.get("token_ttl_seconds", 1800)
        if not isinstance(host, str) or not host:
            errors.append("gateway.host must be a non-empty string")
        if not isinstance(port, int) or not 1 <= port <= 65535:
            errors.append("gateway.port must be an integer in 1..65535")
        if not isinstance(ttl, int) or ttl < 1:
            errors.append("gateway.token_ttl_seconds must be a positive integer")

        if errors or channel is None:
            raise ConfigError(errors or ["channel section missing"])
        return cls(
            network_name=network_name,
            ca=CaConfig(ca_id=ca_id, seed=seed),
            orgs=tuple(orgs),
            channel=channel,
            admin=AdminConfig(id=admin_id, password=admin_password),
            gateway=GatewayConfig(host=host, port=port, token_ttl_seconds=ttl),
            genesis_time=genesis_time,
        )


def load_config(path: str) -> NetworkConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError([f"not valid YAML: {exc}"]) from None
    return NetworkConfig.from_dict(raw)


def dump_config(config: NetworkConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=False)


def _private_bytes(key: ed25519.Ed25519PrivateKey) -> bytes:
    return key.private_bytes(
        serialization.Encoding.Raw,
        serialization.PrivateFormat.Raw,
        serialization.NoEncryption(),
    )


class IdentityRegistry:
    """Wallet store: one JSON file per enrolled (subject, role) pair."""

    def __init__(self, directory: str):
        self.directory = directory
        os.makedirs(directory, exist_ok=True)

    def _path(self, subject_id: str, role: Role) -> str:
        return os.path.join(self.directory, f"{subject_id}.{role.value}.json")

    def save(self, certificate: Certificate, signing_key: ed25519.Ed25519PrivateKey) -> None:
        record = {
            "subject_id": certificate.subject_id,
            "org": certificate.org,
            "role": certificate.role.value,
            "certificate": certificate.encode().hex(),
            "private_key": _private_bytes(signing_key).hex(),
        }
        path = self._path(certificate.subject_id, certificate.role)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2)
        os.replace(tmp, path)

    def load(self, subject_id: str, role: Role) -> Optional[ClientIdentity]:
        path = self._path(subject_id, role)
        if not os.path.exists(path):
            return None
        with open(path, "r", encoding="utf-8") as fh:
            record = json.load(fh)
        certificate = Certificate.decode(bytes.fromhex(record["certificate"]))
        key = ed25519.Ed25519PrivateKey.from_private_bytes(
            bytes.fromhex(record["private_key"])
        )
        return ClientIdentity(certificate, key)

    def delete(self, subject_id: str, role: Role) -> None:
        path = self._path(subject_id, role)
        if os.path.exists(path):
            os.remove(path)

    def list_enrolled(self) -> list[tuple[str, Role]]:
        found = []
        for entry in sorted(os.listdir(self.directory)):
            if not entry.endswith(".json"):
                continue
            stem = entry[: -len(".json")]
            subject_id, _, role_value = stem.rpartition(".")
            try:
                found.append((subject_id, Role(role_value)))
            except ValueError:
                continue
        return found


def default_chaincodes() -> dict:
    return {
        LifecycleChaincode.name: LifecycleChaincode(),
        EhrChaincode.name: EhrChaincode(),
        NoopChaincode.name: NoopChaincode(),
    }


def build_msps(config: NetworkConfig) -> tuple[dict[str, MspConfig], dict[str, MspConfig]]:
    """Per-org MSPs: one admitting the org's client roles, one its peers."""
    client_msps = {}
    endorser_msps = {}
    for org in config.orgs:
        client_msps[org.name] = MspConfig(
            org=org.name,
            trusted_ca_ids=(config.ca.ca_id,),
            admitted_roles=tuple(org.admitted_roles),
        )
        endorser_msps[org.name] = MspConfig(
            org=org.name,
            trusted_ca_ids=(config.ca.ca_id,),
            admitted_roles=(Role.PEER,),
        )
    return client_msps, endorser_msps


class NetworkHandle:
    """A running network plus everything persisted beside it."""

    def __init__(
        self,
        config: NetworkConfig,
        data_dir: str,
        ca: CertificateAuthority,
        registry: IdentityRegistry,
        network: Network,
        rng: random.Random,
    ):
        self.config = config
        self.data_dir = data_dir
        self.ca = ca
        self.registry = registry
        self.network = network
        self.rng = rng
        self._enroll_lock = threading.RLock()

    # -- paths ---------------------------------------------------------

    @property
    def state_path(self) -> str:
        return os.path.join(self.data_dir, STATE_FILE)

    @property
    def ca_path(self) -> str:
        return os.path.join(self.data_dir, CA_FILE)

    # -- identity management --------------------------------------------

    def persist_ca(self) -> None:
        tmp = self.ca_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self.ca.to_state(), fh, indent=2)
        os.replace(tmp, self.ca_path)

    def wallet(self, subject_id: str, role: Role) -> Optional[ClientIdentity]:
        return self.registry.load(subject_id, role)

    def enroll_client(self, subject_id: str, role: Role) -> ClientIdentity:
        """Issue a certificate for a client role and store the wallet.

        Idempotent for an already-enrolled pair: the stored wallet is
        returned rather than a second certificate issued.
        """
        with self._enroll_lock:
            existing = self.registry.load(subject_id, role)
            if existing is not None and self.ca.find_active(subject_id, role) is not None:
                return existing
            org = self.config.org_for_role(role)
            key, public = generate_keypair(self.rng.randbytes(32))
            certificate = self.ca.issue(subject_id, org.name, role, public)
            self.registry.save(certificate, key)
            self.persist_ca()
            return ClientIdentity(certificate, key)

    def revoke_client(self, subject_id: str, role: Role) -> bool:
        """Revoke the active certificate and drop the stored wallet."""
        with self._enroll_lock:
            certificate = self.ca.find_active(subject_id, role)
            if certificate is None:
                return False
            self.ca.revoke(certificate.serial)
            self.registry.delete(subject_id, role)
            self.persist_ca()
            return True

    def admin_wallet(self) -> ClientIdentity:
        wallet = self.registry.load(self.config.admin.id, Role.ADMIN)
        if wallet is None:
            raise BootstrapError("admin wallet missing from the identity registry")
        return wallet

    # -- persistence ------------------------------------------------------

    def save_snapshot(self) -> None:
        self.network.chain.save_state_snapshot(self.state_path)

    def close(self) -> None:
        self.network.close()
        self.save_snapshot()
        self.persist_ca()


def _rollback_bootstrap(data_dir: str) -> None:
    """Remove only the files bootstrap creates; never the directory itself."""
    for name in (CHAIN_LOG, STATE_FILE, CA_FILE, CONFIG_FILE, GATEWAY_FILE, ADMIN_AUTH_FILE):
        path = os.path.join(data_dir, name)
        if os.path.exists(path):
            os.remove(path)
    identities = os.path.join(data_dir, IDENTITIES_DIR)
    if os.path.isdir(identities):
        for entry in os.listdir(identities):
            os.remove(os.path.join(identities, entry))
        os.rmdir(identities)


def bootstrap(config: NetworkConfig, data_dir: str) -> dict:
    """Create the data directory, the genesis block, and the deployments.

    Deterministic when the config pins ``genesis_time`` and ``ca.seed``:
    the same definition file then produces a byte-identical block log.
    A failed bootstrap removes everything it created. Returns a summary
    of what was created.
    """
    if not config.admin.password:
        raise BootstrapError("bootstrap needs admin.password in the definition")
    log_path = os.path.join(data_dir, CHAIN_LOG)
    if os.path.exists(log_path):
        raise AlreadyInitializedError(f"{data_dir} already holds a chain")
    os.makedirs(data_dir, exist_ok=True)
    try:
        return _bootstrap_inner(config, data_dir, log_path)
    except Exception:
        _rollback_bootstrap(data_dir)
        raise


def _bootstrap_inner(config: NetworkConfig, data_dir: str, log_path: str) -> dict:
    clock: Clock
    if config.genesis_time is not None:
        genesis_time = config.genesis_time
        clock = lambda: genesis_time  # noqa: E731 - fixed bootstrap clock
    else:
        clock = system_clock
    rng = random.Random(config.ca.seed) if config.ca.seed is not None else random.SystemRandom()

    ca = CertificateAuthority.create(config.ca.ca_id, seed=config.ca.seed, clock=clock)
    ca_registry = {ca.ca_id: ca}
    client_msps, endorser_msps = build_msps(config)
    registry = IdentityRegistry(os.path.join(data_dir, IDENTITIES_DIR))
    chaincodes = default_chaincodes()

    peers = []
    for org in config.orgs:
        key, public = generate_keypair(rng.randbytes(32))
        certificate = ca.issue(org.peer_id, org.name, Role.PEER, public)
        registry.save(certificate, key)
        peers.append(
            Peer(
                peer_id=org.peer_id,
                org=org.name,
                certificate=certificate,
                signing_key=key,
                chaincodes=chaincodes,
                client_msps=client_msps,
                ca_registry=ca_registry,
                clock=clock,
            )
        )

    admin_org = config.org_for_role(Role.ADMIN)
    admin_key, admin_public = generate_keypair(rng.randbytes(32))
    admin_cert = ca.issue(config.admin.id, admin_org.name, Role.ADMIN, admin_public)
    registry.save(admin_cert, admin_key)
    admin = ClientIdentity(admin_cert, admin_key)

    chain = Chain(log_path)
    network = Network(
        config=config.channel,
        chain=chain,
        peers=peers,
        client_msps=client_msps,
        endorser_msps=endorser_msps,
        ca_registry=ca_registry,
        clock=clock,
        rng=rng,
    )
    try:
        network.bootstrap_genesis(admin)
        # Deployment block is cut directly so bootstrap output does not
        # depend on ordering timing.
        deploy_txs = []
        for name in (EhrChaincode.name, NoopChaincode.name):
            proposal = network.new_proposal(
                admin, LifecycleChaincode.name, "deployChaincode", [name, "1.0"]
            )
            tx, _payload = network.endorse_proposal(proposal)
            deploy_txs.append(tx)
        block = chain.append_block(deploy_txs, network._validate_transaction)
        if any(flag != VALID for flag in block.validity):
            raise BootstrapError(f"deployment block invalid: {block.validity}")
        chain.save_state_snapshot(os.path.join(data_dir, STATE_FILE))
        height = chain.height
    finally:
        chain.close()

    handle_files = {
        "admin_auth": os.path.join(data_dir, ADMIN_AUTH_FILE),
        "gateway": os.path.join(data_dir, GATEWAY_FILE),
        "ca": os.path.join(data_dir, CA_FILE),
        "config": os.path.join(data_dir, CONFIG_FILE),
    }
    salt = rng.randbytes(16)
    with open(handle_files["admin_auth"], "w", encoding="utf-8") as fh:
        json.dump(
            {
                "id": config.admin.id,
                "salt": salt.hex(),
                "password_hash": hash_password(config.admin.password, salt),
            },
            fh,
            indent=2,
        )
    with open(handle_files["gateway"], "w", encoding="utf-8") as fh:
        json.dump(
            {
                "secret": rng.randbytes(32).hex(),
                "token_ttl_seconds": config.gateway.token_ttl_seconds,
                "host": config.gateway.host,
                "port": config.gateway.port,
            },
            fh,
            indent=2,
        )
    with open(handle_files["ca"], "w", encoding="utf-8") as fh:
        json.dump(ca.to_state(), fh, indent=2)
    # drop the plaintext admin password from the persisted copy; login
    # verifies against the hash in admin_auth.json
    redacted = dataclasses.replace(config, admin=AdminConfig(id=config.admin.id))
    dump_config(redacted, handle_files["config"])

    return {
        "data_dir": data_dir,
        "network_name": config.network_name,
        "channel_id": config.channel.channel_id,
        "height": height,
        "orgs": [org.name for org in config.orgs],
        "peers": [org.peer_id for org in config.orgs],
        "admin_id": config.admin.id,
        "chaincodes": [EhrChaincode.name, NoopChaincode.name],
    }


def anchored_clock(start: int) -> Clock:
    """Seconds counter starting at ``start`` when the clock is built.

    A network bootstrapped with a pinned ``genesis_time`` runs on this
    logical clock so its certificates stay valid relative to it no
    matter when the process starts.
    """
    t0 = time.monotonic()

    def clock() -> int:
        return start + int(time.monotonic() - t0)

    return clock


def default_clock_for(config: NetworkConfig) -> Clock:
    if config.genesis_time is not None:
        return anchored_clock(config.genesis_time)
    return system_clock


def load_admin_auth(data_dir: str) -> dict:
    with open(os.path.join(data_dir, ADMIN_AUTH_FILE), "r", encoding="utf-8") as fh:
        return json.load(fh)


def check_admin_password(data_dir: str, password: str) -> bool:
    import hmac as _hmac

    auth = load_admin_auth(data_dir)
    candidate = hash_password(password, bytes.fromhex(auth["salt"]))
    return _hmac.compare_digest(candidate, auth["password_hash"])


def enroll_offline(
    data_dir: str,
    subject_id: str,
    role: Role,
    clock: Optional[Clock] = None,
    rng: Optional[random.Random] = None,
) -> Certificate:
    """Issue a certificate and store the wallet without starting the network.

    Certificate issuance needs only the CA and the registry, so tools
    can enroll while no gateway is running.
    """
    config = load_config(os.path.join(data_dir, CONFIG_FILE))
    if clock is None:
        clock = default_clock_for(config)
    ca_path = os.path.join(data_dir, CA_FILE)
    with open(ca_path, "r", encoding="utf-8") as fh:
        ca = CertificateAuthority.from_state(json.load(fh), clock=clock)
    registry = IdentityRegistry(os.path.join(data_dir, IDENTITIES_DIR))
    org = config.org_for_role(role)
    source = rng if rng is not None else random.SystemRandom()
    key, public = generate_keypair(source.randbytes(32))
    certificate = ca.issue(subject_id, org.name, role, public)
    registry.save(certificate, key)
    tmp = ca_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(ca.to_state(), fh, indent=2)
    os.replace(tmp, ca_path)
    return certificate


def open_network(
    data_dir: str,
    clock: Optional[Clock] = None,
    rng: Optional[random.Random] = None,
) -> NetworkHandle:
    """Rebuild a running network from a bootstrapped data directory."""
    config = load_config(os.path.join(data_dir, CONFIG_FILE))
    if clock is None:
        clock = default_clock_for(config)
    with open(os.path.join(data_dir, CA_FILE), "r", encoding="utf-8") as fh:
        ca = CertificateAuthority.from_state(json.load(fh), clock=clock)
    ca_registry = {ca.ca_id: ca}
    client_msps, endorser_msps = build_msps(config)
    registry = IdentityRegistry(os.path.join(data_dir, IDENTITIES_DIR))
    chaincodes = default_chaincodes()

    peers = []
    for org in config.orgs:
        wallet = registry.load(org.peer_id, Role.PEER)
        if wallet is None:
            raise BootstrapError(f"peer wallet {org.peer_id} missing")
        peers.append(
            Peer(
                peer_id=org.peer_id,
                org=org.name,
                certificate=wallet.certificate,
                signing_key=wallet.signing_key,
                chaincodes=chaincodes,
                client_msps=client_msps,
                ca_registry=ca_registry,
                clock=clock,
            )
        )

    chain = Chain.open(
        os.path.join(data_dir, CHAIN_LOG), os.path.join(data_dir, STATE_FILE)
    )
    network = Network(
        config=config.channel,
        chain=chain,
        peers=peers,
        client_msps=client_msps,
        endorser_msps=endorser_msps,
        ca_registry=ca_registry,
        clock=clock,
        rng=rng if rng is not None else random.SystemRandom(),
    )
    network.start()
    return NetworkHandle(
        config=config,
        data_dir=data_dir,
        ca=ca,
        registry=registry,
        network=network,
        rng=network._rng,
    )


DEMO_DOCTORS = [
    ("DOC001", "Naledi Jacobs", "Cardiology"),
    ("DOC002", "Sipho Meyer", "Oncology"),
]
DEMO_PATIENTS = [
    ("PID002", {"first_name": "Anele", "last_name": "Dlamini", "date_of_birth": "1988-02-17"}),
    ("PID003", {"first_name": "Maria", "last_name": "Fourie", "date_of_birth": "1979-11-02"}),
    ("PID004", {"first_name": "Johan", "last_name": "Botha", "date_of_birth": "1994-06-30"}),
]


def demo_password(subject_id: str) -> str:
    return f"{subject_id.lower()}-pw"


def seed_demo(handle: NetworkHandle) -> dict:
    """Populate a bootstrapped network with a small demo roster."""
    admin = handle.admin_wallet()
    network = handle.network

    def run(wallet: ClientIdentity, function: str, args: list[str], transient=None) -> None:
        _payload, future = network.invoke(wallet, "ehr", function, args, transient)
        receipt = future.result(timeout=30)
        if receipt.validity != VALID:
            raise BootstrapError(f"{function} flagged {receipt.validity}")

    for doctor_id, display_name, department in DEMO_DOCTORS:
        handle.enroll_client(doctor_id, Role.DOCTOR)
        run(
            admin,
            "registerDoctor",
            [doctor_id, display_name, department, handle.rng.randbytes(16).hex()],
            {"password": demo_password(doctor_id)},
        )
    for patient_id, personal in DEMO_PATIENTS:
        handle.enroll_client(patient_id, Role.PATIENT)
        run(
            admin,
            "createPatient",
            [patient_id, json.dumps(personal), handle.rng.randbytes(16).hex()],
            {"password": demo_password(patient_id)},
        )
    grantee = handle.wallet("PID002", Role.PATIENT)
    run(grantee, "grantAccess", ["PID002", "DOC002"])
    handle.save_snapshot()
    return {
        "doctors": [d[0] for d in DEMO_DOCTORS],
        "patients": [p[0] for p in DEMO_PATIENTS],
        "grants": [["PID002", "DOC002"]],
    }
