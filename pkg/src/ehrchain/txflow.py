"""Execute-order-validate transaction flow.

A client signs a proposal; peers simulate it against a committed
snapshot and endorse the resulting read-write set; the orderer batches
endorsed transactions into blocks; the committer checks the endorsement
policy and every read version per transaction and flags each one inside
the block it lands in. Simulation never mutates state, only commitment
does, so a rejected transaction still appears on the chain with its
validity flag.
"""

from __future__ import annotations

import json
import queue
import random
import threading
import time
from concurrent.futures import Future
from dataclasses import dataclass, field
from typing import Callable, Optional

from .canonical import canonical_json_bytes, pack_fields, sha256_hex
from .chaincode import Chaincode, execute
from .errors import VALIDATION, ChaincodeError, EndorsementRejected, QueueFullError
from .identity import (
    UNTRUSTED_ISSUER,
    Certificate,
    CertificateAuthority,
    CertificateRejected,
    Clock,
    Identity,
    MspConfig,
    Role,
    system_clock,
    verify_certificate,
)
from .ledger import (
    BAD_ENDORSEMENT,
    MVCC_CONFLICT,
    VALID,
    Chain,
    ReadWriteSet,
    StateKey,
    StateSnapshot,
    Transaction,
    Version,
)

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric import ed25519

NONCE_BYTES = 24


def derive_tx_id(creator: Certificate, nonce: bytes, id_payload: dict) -> str:
    """Transaction id: digest of creator, nonce, and the call itself."""
    return sha256_hex(
        bytes.fromhex(creator.digest()) + nonce + canonical_json_bytes(id_payload)
    )


def proposal_signing_payload(creator: Certificate, nonce: bytes, id_payload: dict) -> bytes:
    """Bytes the client signs. Transient fields are deliberately outside
    the signature so committed transactions verify without them."""
    return pack_fields([creator.encode(), nonce, canonical_json_bytes(id_payload)])


def endorsement_message(tx_id: str, rwset: ReadWriteSet) -> bytes:
    """Bytes a peer signs: binds the endorsement to one simulation result."""
    return pack_fields([tx_id.encode("ascii"), bytes.fromhex(rwset.digest())])


@dataclass(frozen=True)
class Proposal:
    """A signed chaincode invocation request.

    ``transient`` carries secrets (raw passwords) to the endorsing peers
    only; it is excluded from the signature and never stored.
    """

    channel_id: str
    chaincode_id: str
    function: str
    args: tuple[str, ...]
    creator: Certificate
    nonce: bytes
    timestamp: int
    signature: bytes
    transient: dict[str, str] = field(default_factory=dict)

    def id_payload(self) -> dict:
        return {
            "channel_id": self.channel_id,
            "chaincode_id": self.chaincode_id,
            "function": self.function,
            "args": list(self.args),
            "timestamp": self.timestamp,
        }

    def tx_id(self) -> str:
        return derive_tx_id(self.creator, self.nonce, self.id_payload())

    def verify_signature(self) -> bool:
        payload = proposal_signing_payload(self.creator, self.nonce, self.id_payload())
        try:
            self.creator.verification_key().verify(self.signature, payload)
            return True
        except InvalidSignature:
            return False


class ClientIdentity:
    """An enrolled identity plus its signing key: what a wallet stores."""

    def __init__(self, certificate: Certificate, signing_key: ed25519.Ed25519PrivateKey):
        self.certificate = certificate
        self._signing_key = signing_key

    @property
    def subject_id(self) -> str:
        return self.certificate.subject_id

    @property
    def role(self) -> Role:
        return self.certificate.role

    @property
    def signing_key(self) -> ed25519.Ed25519PrivateKey:
        return self._signing_key

    def sign(self, payload: bytes) -> bytes:
        return self._signing_key.sign(payload)

    def create_proposal(
        self,
        channel_id: str,
        chaincode_id: str,
        function: str,
        args: list[str],
        nonce: bytes,
        timestamp: int,
        transient: Optional[dict[str, str]] = None,
    ) -> Proposal:
        id_payload = {
            "channel_id": channel_id,
            "chaincode_id": chaincode_id,
            "function": function,
            "args": list(args),
            "timestamp": timestamp,
        }
        signature = self.sign(proposal_signing_payload(self.certificate, nonce, id_payload))
        return Proposal(
            channel_id=channel_id,
            chaincode_id=chaincode_id,
            function=function,
            args=tuple(args),
            creator=self.certificate,
            nonce=nonce,
            timestamp=timestamp,
            signature=signature,
            transient=dict(transient or {}),
        )


@dataclass(frozen=True)
class EndorsementPolicy:
    """Which organizations must endorse: all of them, or any ``n``."""

    rule: str
    n: Optional[int] = None

    def __post_init__(self):
        if self.rule == "all":
            if self.n is not None:
                raise ValueError("'all' takes no count")
        elif self.rule == "any":
            if self.n is None or self.n < 1:
                raise ValueError("'any' needs a count of at least 1")
        else:
            raise ValueError(f"unknown endorsement rule {self.rule!r}")

    def satisfied_by(self, endorsing_orgs: set[str], channel_orgs: list[str]) -> bool:
        relevant = endorsing_orgs & set(channel_orgs)
        if self.rule == "all":
            return relevant == set(channel_orgs)
        return len(relevant) >= self.n

    def to_dict(self) -> dict:
        if self.rule == "all":
            return {"rule": "all"}
        return {"rule": "any", "n": self.n}

    @classmethod
    def from_dict(cls, raw: dict) -> "EndorsementPolicy":
        return cls(rule=raw["rule"], n=raw.get("n"))


@dataclass(frozen=True)
class ChannelConfig:
    channel_id: str
    orgs: tuple[str, ...]
    endorsement_policy: EndorsementPolicy
    max_block_txs: int = 10
    block_timeout_ms: int = 500

    def __post_init__(self):
        if not self.channel_id:
            raise ValueError("channel_id must be non-empty")
        if not self.orgs or len(set(self.orgs)) != len(self.orgs):
            raise ValueError("orgs must be non-empty and unique")
        if self.endorsement_policy.rule == "any" and self.endorsement_policy.n > len(self.orgs):
            raise ValueError("endorsement count exceeds the number of orgs")
        if self.max_block_txs < 1:
            raise ValueError("max_block_txs must be at least 1")
        if self.block_timeout_ms < 1:
            raise ValueError("block_timeout_ms must be at least 1")

    def to_dict(self) -> dict:
        return {
            "channel_id": self.channel_id,
            "orgs": list(self.orgs),
            "endorsement_policy": self.endorsement_policy.to_dict(),
            "max_block_txs": self.max_block_txs,
            "block_timeout_ms": self.block_timeout_ms,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ChannelConfig":
        return cls(
            channel_id=raw["channel_id"],
            orgs=tuple(raw["orgs"]),
            endorsement_policy=EndorsementPolicy.from_dict(raw["endorsement_policy"]),
            max_block_txs=raw.get("max_block_txs", 10),
            block_timeout_ms=raw.get("block_timeout_ms", 500),
        )


@dataclass
class ProposalResponse:
    endorser: Certificate
    signature: bytes
    rwset: ReadWriteSet
    payload: str


class Peer:
    """Endorsing peer: simulates proposals and signs the results.

    Peers hold no private ledger state; they read the shared committed
    snapshot handed to them per proposal, which keeps every endorsement
    of one proposal byte-identical.
    """

    def __init__(
        self,
        peer_id: str,
        org: str,
        certificate: Certificate,
        signing_key: ed25519.Ed25519PrivateKey,
        chaincodes: dict[str, Chaincode],
        client_msps: dict[str, MspConfig],
        ca_registry: dict[str, CertificateAuthority],
        clock: Clock = system_clock,
    ):
        self.peer_id = peer_id
        self.org = org
        self.certificate = certificate
        self._signing_key = signing_key
        self.chaincodes = chaincodes
        self._client_msps = client_msps
        self._ca_registry = ca_registry
        self._clock = clock

    def _authenticate(self, proposal: Proposal) -> Identity:
        msp = self._client_msps.get(proposal.creator.org)
        if msp is None:
            raise EndorsementRejected(
                "identity", UNTRUSTED_ISSUER, f"no MSP for org {proposal.creator.org!r}"
            )
        try:
            identity = verify_certificate(
                msp, proposal.creator, self._clock(), self._ca_registry
            )
        except CertificateRejected as exc:
            raise EndorsementRejected("identity", exc.reason, str(exc)) from None
        if not proposal.verify_signature():
            raise EndorsementRejected(
                "identity", "bad-signature", "proposal signature does not verify"
            )
        return identity

    def endorse(self, proposal: Proposal, snapshot: StateSnapshot) -> ProposalResponse:
        identity = self._authenticate(proposal)
        chaincode = self.chaincodes.get(proposal.chaincode_id)
        if chaincode is None:
            raise EndorsementRejected(
                "chaincode", VALIDATION, f"unknown chaincode {proposal.chaincode_id!r}"
            )
        try:
            rwset, payload = execute(
                chaincode,
                snapshot,
                identity,
                proposal.function,
                list(proposal.args),
                proposal.timestamp,
                proposal.transient,
            )
        except ChaincodeError as exc:
            raise EndorsementRejected("chaincode", exc.code, exc.message) from None
        signature = self._signing_key.sign(endorsement_message(proposal.tx_id(), rwset))
        return ProposalResponse(self.certificate, signature, rwset, payload)


def check_transaction_authorization(
    tx: Transaction,
    config: ChannelConfig,
    client_msps: dict[str, MspConfig],
    endorser_msps: dict[str, MspConfig],
    ca_registry: dict[str, CertificateAuthority],
    now: int,
) -> Optional[str]:
    """Commit-time authorization; None when sound, else the first defect.

    Re-derives the transaction id, authenticates the creator and its
    signature over the proposal payload, authenticates each endorsement,
    and evaluates the endorsement policy over the distinct endorsing
    orgs that survive those checks.
    """
    if tx.channel_id != config.channel_id:
        return f"transaction for channel {tx.channel_id!r}"
    if tx.compute_tx_id() != tx.tx_id:
        return "transaction id does not re-derive"
    client_msp = client_msps.get(tx.creator.org)
    if client_msp is None:
        return f"no client MSP for org {tx.creator.org!r}"
    try:
        verify_certificate(client_msp, tx.creator, now, ca_registry)
    except CertificateRejected as exc:
        return f"creator certificate rejected: {exc.reason}"
    payload = proposal_signing_payload(tx.creator, tx.nonce, tx.id_payload())
    try:
        tx.creator.verification_key().verify(tx.client_signature, payload)
    except InvalidSignature:
        return "client signature does not verify"
    message = endorsement_message(tx.tx_id, tx.rwset)
    endorsing_orgs: set[str] = set()
    for cert, signature in tx.endorsements:
        msp = endorser_msps.get(cert.org)
        if msp is None:
            continue
        try:
            verify_certificate(msp, cert, now, ca_registry)
        except CertificateRejected:
            continue
        try:
            cert.verification_key().verify(signature, message)
        except InvalidSignature:
            continue
        endorsing_orgs.add(cert.org)
    if not config.endorsement_policy.satisfied_by(endorsing_orgs, list(config.orgs)):
        return f"endorsement policy unmet by orgs {sorted(endorsing_orgs)}"
    return None


@dataclass
class CommitReceipt:
    """What a submitter learns once its transaction is dealt with.

    ``block_num`` is None when ordering refused the transaction (a
    duplicate id), so it never reached a block.
    """

    tx_id: str
    block_num: Optional[int]
    validity: str

    @property
    def committed(self) -> bool:
        return self.validity == VALID


_STOP = object()


class Orderer:
    """Single-channel ordering service with time- and size-based cutting.

    One committer thread drains a bounded FIFO queue; a block is cut
    when it holds ``max_block_txs`` transactions or ``block_timeout_ms``
    has passed since the first queued transaction of the batch.
    """

    def __init__(
        self,
        chain: Chain,
        validator,
        max_block_txs: int = 10,
        block_timeout_ms: int = 500,
        queue_capacity: int = 4096,
    ):
        self._chain = chain
        self._validator = validator
        self._max_block_txs = max_block_txs
        self._timeout_s = block_timeout_ms / 1000.0
        self._queue: queue.Queue = queue.Queue(maxsize=queue_capacity)
        self._thread: Optional[threading.Thread] = None
        self._closed = False

    def start(self) -> None:
        if self._thread is not None:
            raise RuntimeError("orderer already started")
        self._thread = threading.Thread(target=self._run, name="orderer", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        """Flush everything already queued, then stop the committer."""
        if self._thread is None:
            return
        self._closed = True
        self._queue.put(_STOP)
        self._thread.join()
        self._thread = None

    def submit(self, tx: Transaction) -> "Future[CommitReceipt]":
        if self._closed:
            raise RuntimeError("orderer is stopped")
        future: Future = Future()
        try:
            self._queue.put_nowait((tx, future))
        except queue.Full:
            raise QueueFullError("ordering queue at capacity") from None
        return future

    def _run(self) -> None:
        running = True
        while running:
            item = self._queue.get()
            if item is _STOP:
                break
            batch = [item]
            deadline = time.monotonic() + self._timeout_s
            while len(batch) < self._max_block_txs:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break
                try:
                    nxt = self._queue.get(timeout=remaining)
                except queue.Empty:
                    break
                if nxt is _STOP:
                    running = False
                    break
                batch.append(nxt)
            self._cut_block(batch)
        # Drain whatever was queued before the stop marker.
        leftovers = []
        while True:
            try:
                item = self._queue.get_nowait()
            except queue.Empty:
                break
            if item is not _STOP:
                leftovers.append(item)
        for start in range(0, len(leftovers), self._max_block_txs):
            self._cut_block(leftovers[start : start + self._max_block_txs])

    def _cut_block(self, batch: list) -> None:
        fresh: list = []
        seen: set[str] = set()
        duplicates: list = []
        for tx, future in batch:
            if tx.tx_id in seen or self._chain.get_transaction(tx.tx_id) is not None:
                duplicates.append((tx, future))
            else:
                seen.add(tx.tx_id)
                fresh.append((tx, future))
        if fresh:
            try:
                block = self._chain.append_block(
                    [tx for tx, _f in fresh], self._validator
                )
            except Exception as exc:
                for _tx, future in fresh:
                    future.set_exception(exc)
            else:
                for index, (tx, future) in enumerate(fresh):
                    future.set_result(
                        CommitReceipt(tx.tx_id, block.number, block.validity[index])
                    )
        for tx, future in duplicates:
            future.set_result(CommitReceipt(tx.tx_id, None, BAD_ENDORSEMENT))


class Network:
    """One channel's worth of moving parts wired together.

    Owns the peers, the ordering service, and the commit-time validator;
    exposes the client-facing endorse/submit/query calls the gateway
    uses. Construction does not start the orderer: call ``start`` after
    the genesis block exists.
    """

    def __init__(
        self,
        config: ChannelConfig,
        chain: Chain,
        peers: list[Peer],
        client_msps: dict[str, MspConfig],
        endorser_msps: dict[str, MspConfig],
        ca_registry: dict[str, CertificateAuthority],
        clock: Clock = system_clock,
        rng: Optional[random.Random] = None,
        queue_capacity: int = 4096,
    ):
        if not peers:
            raise ValueError("a network needs at least one peer")
        self.config = config
        self.chain = chain
        self.peers = list(peers)
        self.client_msps = client_msps
        self.endorser_msps = endorser_msps
        self.ca_registry = ca_registry
        self.clock = clock
        self._rng = rng if rng is not None else random.SystemRandom()
        self.orderer = Orderer(
            chain,
            self._validate_transaction,
            max_block_txs=config.max_block_txs,
            block_timeout_ms=config.block_timeout_ms,
            queue_capacity=queue_capacity,
        )

    # -- lifecycle -----------------------------------------------------

    def bootstrap_genesis(self, admin: ClientIdentity) -> None:
        """Commit block 0: the channel configuration transaction."""
        proposal = self.new_proposal(
            admin, "_lifecycle", "createChannel", [json.dumps(self.config.to_dict())]
        )
        tx, _payload = self.endorse_proposal(proposal)
        self.chain.append_genesis([tx])

    def start(self) -> None:
        self.orderer.start()

    def close(self) -> None:
        self.orderer.stop()
        self.chain.close()

    # -- client-facing flow ---------------------------------------------

    def new_nonce(self) -> bytes:
        return self._rng.randbytes(NONCE_BYTES)

    def new_proposal(
        self,
        client: ClientIdentity,
        chaincode_id: str,
        function: str,
        args: list[str],
        transient: Optional[dict[str, str]] = None,
    ) -> Proposal:
        return client.create_proposal(
            self.config.channel_id,
            chaincode_id,
            function,
            args,
            nonce=self.new_nonce(),
            timestamp=self.clock(),
            transient=transient,
        )

    def endorse_proposal(
        self, proposal: Proposal, peers: Optional[list[Peer]] = None
    ) -> tuple[Transaction, str]:
        """Collect endorsements and assemble the transaction envelope.

        Every chosen peer simulates against the same committed snapshot;
        diverging results mean a non-deterministic chaincode and reject
        the proposal outright.
        """
        chosen = self.peers if peers is None else peers
        snapshot = self.chain.snapshot()
        responses = [peer.endorse(proposal, snapshot) for peer in chosen]
        digests = {response.rwset.digest() for response in responses}
        payloads = {response.payload for response in responses}
        if len(digests) != 1 or len(payloads) != 1:
            raise EndorsementRejected(
                "chaincode", VALIDATION, "endorsing peers disagree on the simulation result"
            )
        tx = Transaction(
            tx_id=proposal.tx_id(),
            channel_id=proposal.channel_id,
            creator=proposal.creator,
            chaincode_id=proposal.chaincode_id,
            function=proposal.function,
            args=list(proposal.args),
            nonce=proposal.nonce,
            timestamp=proposal.timestamp,
            rwset=responses[0].rwset,
            endorsements=[(r.endorser, r.signature) for r in responses],
            client_signature=proposal.signature,
        )
        return tx, responses[0].payload

    def query(self, proposal: Proposal, peer: Optional[Peer] = None) -> str:
        """Evaluate a proposal without ordering it; returns the payload."""
        endorser = peer if peer is not None else self.peers[0]
        response = endorser.endorse(proposal, self.chain.snapshot())
        return response.payload

    def submit(self, tx: Transaction) -> "Future[CommitReceipt]":
        return self.orderer.submit(tx)

    def invoke(
        self,
        client: ClientIdentity,
        chaincode_id: str,
        function: str,
        args: list[str],
        transient: Optional[dict[str, str]] = None,
    ) -> tuple[str, "Future[CommitReceipt]"]:
        """Endorse and order in one go; returns (payload, receipt future)."""
        proposal = self.new_proposal(client, chaincode_id, function, args, transient)
        tx, payload = self.endorse_proposal(proposal)
        return payload, self.submit(tx)

    # -- commit-time validation -----------------------------------------

    def _validate_transaction(
        self, tx: Transaction, version_of: Callable[[StateKey], Optional[Version]]
    ) -> str:
        problem = check_transaction_authorization(
            tx,
            self.config,
            self.client_msps,
            self.endorser_msps,
            self.ca_registry,
            self.clock(),
        )
        if problem is not None:
            return BAD_ENDORSEMENT
        for key, version in tx.rwset.reads:
            if version_of(key) != version:
                return MVCC_CONFLICT
        return VALID
