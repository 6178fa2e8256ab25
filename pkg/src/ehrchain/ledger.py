"""Hash-chained block store with a versioned document world state.

The chain is the authoritative log: blocks carry every ordered
transaction together with a per-transaction validity flag, and the
world state is nothing but the left fold of the valid transactions'
write sets. A per-key history index and a document selector query run
against committed data only.

Concurrency: one committer thread owns append_block; readers take a
snapshot under the chain lock and never observe a half-applied block.
"""

from __future__ import annotations

import copy
import json
import math
import os
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .canonical import (
    ZERO_DIGEST,
    FramingError,
    canonical_json_bytes,
    digest_json,
    iter_framed,
    sha256_hex,
    write_framed,
)
from .errors import SelectorError
from .identity import Certificate

# Validity flags stored per transaction in a block.
VALID = "valid"
MVCC_CONFLICT = "mvcc-conflict"
BAD_ENDORSEMENT = "bad-endorsement"

# Canonical document size cap; attachments ride as base64 fields and
# must keep the whole document under this.
MAX_DOCUMENT_BYTES = 1024 * 1024


class LedgerError(Exception):
    pass


class EmptyBlockError(LedgerError):
    """No empty blocks after genesis."""


class SnapshotMismatchError(LedgerError):
    """Persisted world-state snapshot disagrees with log replay."""


@dataclass(frozen=True, order=True)
class StateKey:
    namespace: str
    key: str

    def __post_init__(self):
        if not self.namespace or not self.key:
            raise ValueError("namespace and key must be non-empty")


@dataclass(frozen=True, order=True)
class Version:
    block_num: int
    tx_index: int

    def to_list(self) -> list[int]:
        return [self.block_num, self.tx_index]

    @classmethod
    def from_list(cls, raw) -> "Version":
        return cls(int(raw[0]), int(raw[1]))


@dataclass
class ReadWriteSet:
    """Reads observed (with versions) and writes produced by one execution.

    A write document of None is the delete marker. Keys are unique
    within reads and within writes.
    """

    reads: list[tuple[StateKey, Optional[Version]]] = field(default_factory=list)
    writes: list[tuple[StateKey, Optional[dict]]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "reads": [
                [k.namespace, k.key, None if v is None else v.to_list()] for k, v in self.reads
            ],
            "writes": [[k.namespace, k.key, doc] for k, doc in self.writes],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ReadWriteSet":
        return cls(
            reads=[
                (StateKey(ns, k), None if v is None else Version.from_list(v))
                for ns, k, v in raw["reads"]
            ],
            writes=[(StateKey(ns, k), doc) for ns, k, doc in raw["writes"]],
        )

    def digest(self) -> str:
        return digest_json(self.to_dict())


@dataclass
class Transaction:
    """Signed chaincode invocation as stored in a block."""

    tx_id: str
    channel_id: str
    creator: Certificate
    chaincode_id: str
    function: str
    args: list[str]
    nonce: bytes
    timestamp: int
    rwset: ReadWriteSet
    endorsements: list[tuple[Certificate, bytes]]
    client_signature: bytes

    def id_payload(self) -> dict:
        """Fields the transaction id is derived from (proposal-time)."""
        return {
            "channel_id": self.channel_id,
            "chaincode_id": self.chaincode_id,
            "function": self.function,
            "args": list(self.args),
            "timestamp": self.timestamp,
        }

    def compute_tx_id(self) -> str:
        return sha256_hex(
            bytes.fromhex(self.creator.digest())
            + self.nonce
            + canonical_json_bytes(self.id_payload())
        )

    def to_dict(self) -> dict:
        return {
            "tx_id": self.tx_id,
            "channel_id": self.channel_id,
            "creator": self.creator.encode().hex(),
            "chaincode_id": self.chaincode_id,
            "function": self.function,
            "args": list(self.args),
            "nonce": self.nonce.hex(),
            "timestamp": self.timestamp,
            "rwset": self.rwset.to_dict(),
            "endorsements": [[cert.encode().hex(), sig.hex()] for cert, sig in self.endorsements],
            "client_signature": self.client_signature.hex(),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Transaction":
        return cls(
            tx_id=raw["tx_id"],
            channel_id=raw["channel_id"],
            creator=Certificate.decode(bytes.fromhex(raw["creator"])),
            chaincode_id=raw["chaincode_id"],
            function=raw["function"],
            args=list(raw["args"]),
            nonce=bytes.fromhex(raw["nonce"]),
            timestamp=raw["timestamp"],
            rwset=ReadWriteSet.from_dict(raw["rwset"]),
            endorsements=[
                (Certificate.decode(bytes.fromhex(c)), bytes.fromhex(s))
                for c, s in raw["endorsements"]
            ],
            client_signature=bytes.fromhex(raw["client_signature"]),
        )


@dataclass
class Block:
    number: int
    prev_hash: str
    data_hash: str
    transactions: list[Transaction]
    validity: list[str]
    block_hash: str

    @staticmethod
    def compute_data_hash(transactions: list[Transaction]) -> str:
        return digest_json([tx.to_dict() for tx in transactions])

    @staticmethod
    def compute_block_hash(number: int, prev_hash: str, data_hash: str, validity: list[str]) -> str:
        # Validity flags are sealed under the block hash so a flipped
        # flag is as detectable as a flipped transaction byte.
        return digest_json(
            {
                "number": number,
                "prev_hash": prev_hash,
                "data_hash": data_hash,
                "validity": validity,
            }
        )

    @classmethod
    def build(
        cls, number: int, prev_hash: str, transactions: list[Transaction], validity: list[str]
    ) -> "Block":
        data_hash = cls.compute_data_hash(transactions)
        return cls(
            number=number,
            prev_hash=prev_hash,
            data_hash=data_hash,
            transactions=transactions,
            validity=validity,
            block_hash=cls.compute_block_hash(number, prev_hash, data_hash, validity),
        )

    def to_dict(self) -> dict:
        return {
            "number": self.number,
            "prev_hash": self.prev_hash,
            "data_hash": self.data_hash,
            "transactions": [tx.to_dict() for tx in self.transactions],
            "validity": list(self.validity),
            "block_hash": self.block_hash,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Block":
        return cls(
            number=raw["number"],
            prev_hash=raw["prev_hash"],
            data_hash=raw["data_hash"],
            transactions=[Transaction.from_dict(t) for t in raw["transactions"]],
            validity=list(raw["validity"]),
            block_hash=raw["block_hash"],
        )

    def encode(self) -> bytes:
        return canonical_json_bytes(self.to_dict())


@dataclass
class ChainReport:
    """Result of validate_chain: ok, or the first bad block and why."""

    ok: bool
    block_num: Optional[int] = None
    kind: Optional[str] = None
    detail: str = ""

    def __str__(self) -> str:
        if self.ok:
            return "chain ok"
        return f"block {self.block_num}: {self.kind} ({self.detail})"


def _check_json_value(value, path: str) -> None:
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise LedgerError(f"document keys must be strings at {path}")
            _check_json_value(item, f"{path}.{key}")
    elif isinstance(value, list):
        for index, item in enumerate(value):
            _check_json_value(item, f"{path}[{index}]")
    elif isinstance(value, float):
        # NaN/inf would serialize to non-standard JSON and break replay
        if not math.isfinite(value):
            raise LedgerError(f"document contains a non-finite number at {path}")
    elif value is not None and not isinstance(value, (str, int, bool)):
        raise LedgerError(f"document value at {path} is not JSON-serializable")


def validate_document(doc: dict) -> None:
    if not isinstance(doc, dict):
        raise LedgerError("document must be a JSON object")
    _check_json_value(doc, "$")
    encoded = canonical_json_bytes(doc)
    if len(encoded) > MAX_DOCUMENT_BYTES:
        raise LedgerError(f"document exceeds {MAX_DOCUMENT_BYTES} byte cap")


# ---------------------------------------------------------------------------
# World state
# ---------------------------------------------------------------------------


class StateSnapshot:
    """Immutable point-in-time view used during endorsement and queries."""

    def __init__(self, entries: dict[StateKey, tuple[dict, Version]], height: Optional[Version]):
        self._entries = entries
        self.height = height

    def get(self, key: StateKey) -> Optional[tuple[dict, Version]]:
        return self._entries.get(key)

    def items(self) -> Iterable[tuple[StateKey, tuple[dict, Version]]]:
        return self._entries.items()

    def __len__(self) -> int:
        return len(self._entries)


class WorldState:
    """Versioned key -> document map; the fold of all valid write sets."""

    def __init__(self):
        self.entries: dict[StateKey, tuple[dict, Version]] = {}
        self.height: Optional[Version] = None

    def get(self, key: StateKey) -> Optional[tuple[dict, Version]]:
        return self.entries.get(key)

    def apply_write(self, key: StateKey, doc: Optional[dict], version: Version) -> None:
        if doc is None:
            self.entries.pop(key, None)
        else:
            self.entries[key] = (doc, version)

    def snapshot(self) -> StateSnapshot:
        return StateSnapshot(dict(self.entries), self.height)

    def canonical_form(self) -> dict:
        entries = [
            [k.namespace, k.key, doc, ver.to_list()]
            for k, (doc, ver) in sorted(self.entries.items())
        ]
        return {
            "entries": entries,
            "height": None if self.height is None else self.height.to_list(),
        }

    def canonical_bytes(self) -> bytes:
        return canonical_json_bytes(self.canonical_form())

    @classmethod
    def from_canonical_form(cls, raw: dict) -> "WorldState":
        state = cls()
        for ns, key, doc, ver in raw["entries"]:
            state.entries[StateKey(ns, key)] = (doc, Version.from_list(ver))
        state.height = None if raw["height"] is None else Version.from_list(raw["height"])
        return state


# ---------------------------------------------------------------------------
# Rich queries
# ---------------------------------------------------------------------------

_RANGE_OPS = {"$gt", "$gte", "$lt", "$lte"}


def _resolve_path(doc: dict, path: str):
    node = doc
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            return None, False
        node = node[part]
    return node, True


def _match_predicate(value, present: bool, predicate) -> bool:
    if isinstance(predicate, dict):
        if not predicate:
            raise SelectorError("empty operator object")
        for op, operand in predicate.items():
            if op in _RANGE_OPS:
                if not present or not isinstance(value, (int, float)) or isinstance(value, bool):
                    return False
                if op == "$gt" and not value > operand:
                    return False
                if op == "$gte" and not value >= operand:
                    return False
                if op == "$lt" and not value < operand:
                    return False
                if op == "$lte" and not value <= operand:
                    return False
            elif op == "$contains":
                if not present or not isinstance(value, list) or operand not in value:
                    return False
            else:
                raise SelectorError(f"unknown operator {op!r}")
        return True
    return present and value == predicate


def matches_selector(doc: dict, selector: dict) -> bool:
    """Conjunction of field predicates; the empty selector matches all.

    Predicates are either a scalar (equality), or an operator object
    with $gt/$gte/$lt/$lte range bounds and $contains list membership.
    """
    if not isinstance(selector, dict):
        raise SelectorError("selector must be an object")
    for path, predicate in selector.items():
        if not isinstance(path, str) or not path:
            raise SelectorError("field paths must be non-empty strings")
        value, present = _resolve_path(doc, path)
        if not _match_predicate(value, present, predicate):
            return False
    return True


def rich_query(
    state: WorldState | StateSnapshot, selector: dict, namespace: str
) -> list[tuple[StateKey, dict]]:
    """Documents in the namespace satisfying every predicate, ordered by key."""
    results = []
    for key, (doc, _ver) in state.items() if isinstance(state, StateSnapshot) else state.entries.items():
        if key.namespace != namespace:
            continue
        if matches_selector(doc, selector):
            results.append((key, copy.deepcopy(doc)))
    results.sort(key=lambda pair: pair[0])
    return results


# ---------------------------------------------------------------------------
# The chain
# ---------------------------------------------------------------------------

# validator(tx, version_of) -> validity flag. version_of(key) reports the
# version the key currently carries, including writes applied by earlier
# valid transactions of the block being cut.
TxValidator = Callable[[Transaction, Callable[[StateKey], Optional[Version]]], str]


@dataclass
class HistoryEntry:
    tx_id: str
    block_num: int
    document: Optional[dict]  # None is the delete marker

    def to_dict(self) -> dict:
        return {"tx_id": self.tx_id, "block_num": self.block_num, "document": self.document}


class Chain:
    def __init__(self, log_path: Optional[str] = None):
        self.blocks: list[Block] = []
        self.state = WorldState()
        self._history: dict[StateKey, list[HistoryEntry]] = {}
        self._tx_index: dict[str, tuple[int, int]] = {}
        self._lock = threading.RLock()
        self._log_path = log_path
        self._log_fh = None
        if log_path is not None:
            self._log_fh = open(log_path, "ab")

    def close(self) -> None:
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None

    # -- commit path (single committer thread) -----------------------

    def append_genesis(self, transactions: list[Transaction]) -> Block:
        """Block 0: the channel configuration block."""
        with self._lock:
            if self.blocks:
                raise LedgerError("genesis already committed")
            if not transactions:
                raise EmptyBlockError("genesis needs the channel config transaction")
            block = Block.build(0, ZERO_DIGEST, transactions, [VALID] * len(transactions))
            self._commit(block)
            return block

    def append_block(self, transactions: list[Transaction], validator: TxValidator) -> Block:
        """Validate, flag, and commit one block of ordered transactions.

        Writes of valid transactions apply in order; a transaction sees
        the versions produced by earlier valid transactions in the same
        block, which is what invalidates same-block conflicting reads.
        """
        with self._lock:
            if not self.blocks:
                raise LedgerError("chain has no genesis block")
            if not transactions:
                raise EmptyBlockError("refusing to cut an empty block")
            number = self.blocks[-1].number + 1
            pending: dict[StateKey, Optional[Version]] = {}

            def version_of(key: StateKey) -> Optional[Version]:
                if key in pending:
                    return pending[key]
                current = self.state.get(key)
                return None if current is None else current[1]

            validity = []
            for index, tx in enumerate(transactions):
                flag = validator(tx, version_of)
                validity.append(flag)
                if flag == VALID:
                    for key, _doc in tx.rwset.writes:
                        # Delete markers clear the version the same way
                        # they clear the entry.
                        doc_is_delete = _doc is None
                        pending[key] = None if doc_is_delete else Version(number, index)
            block = Block.build(number, self.blocks[-1].block_hash, transactions, validity)
            self._commit(block)
            return block

    def _commit(self, block: Block) -> None:
        if self._log_fh is not None:
            write_framed(self._log_fh, block.encode())
            self._log_fh.flush()
            os.fsync(self._log_fh.fileno())
        self._apply(block)

    def _apply(self, block: Block) -> None:
        self.blocks.append(block)
        for index, tx in enumerate(block.transactions):
            self._tx_index[tx.tx_id] = (block.number, index)
            if block.validity[index] != VALID:
                continue
            version = Version(block.number, index)
            for key, doc in tx.rwset.writes:
                stored = copy.deepcopy(doc) if doc is not None else None
                self.state.apply_write(key, stored, version)
                self._history.setdefault(key, []).append(
                    HistoryEntry(tx.tx_id, block.number, stored)
                )
        last_index = len(block.transactions) - 1
        self.state.height = Version(block.number, last_index)

    # -- reads (safe from any thread) ---------------------------------

    @property
    def height(self) -> int:
        with self._lock:
            return len(self.blocks) - 1

    def snapshot(self) -> StateSnapshot:
        with self._lock:
            return self.state.snapshot()

    def get_block(self, number: int) -> Optional[Block]:
        with self._lock:
            if 0 <= number < len(self.blocks):
                return self.blocks[number]
            return None

    def get_transaction(self, tx_id: str) -> Optional[tuple[Block, int]]:
        with self._lock:
            loc = self._tx_index.get(tx_id)
            if loc is None:
                return None
            return self.blocks[loc[0]], loc[1]

    def get_history_for_key(self, key: StateKey) -> list[HistoryEntry]:
        """Valid writes that touched the key, oldest first."""
        with self._lock:
            return list(self._history.get(key, []))

    def rich_query(self, selector: dict, namespace: str) -> list[tuple[StateKey, dict]]:
        return rich_query(self.snapshot(), selector, namespace)

    def validate_chain(self) -> ChainReport:
        """Recompute every stored digest and the prev-hash linkage."""
        with self._lock:
            blocks = list(self.blocks)
        prev_hash = ZERO_DIGEST
        for i, block in enumerate(blocks):
            if block.number != i:
                return ChainReport(False, i, "number-sequence", f"stored {block.number}")
            if block.prev_hash != prev_hash:
                return ChainReport(False, i, "prev-hash", "linkage broken")
            data_hash = Block.compute_data_hash(block.transactions)
            if data_hash != block.data_hash:
                return ChainReport(False, i, "data-hash", "transactions do not hash to data_hash")
            if len(block.validity) != len(block.transactions):
                return ChainReport(False, i, "validity-length", "flag per transaction required")
            block_hash = Block.compute_block_hash(
                block.number, block.prev_hash, block.data_hash, block.validity
            )
            if block_hash != block.block_hash:
                return ChainReport(False, i, "block-hash", "header does not hash to block_hash")
            for j, tx in enumerate(block.transactions):
                if tx.compute_tx_id() != tx.tx_id:
                    return ChainReport(False, i, "tx-id", f"transaction {j} id mismatch")
            prev_hash = block.block_hash
        return ChainReport(True)

    # -- persistence ---------------------------------------------------

    def save_state_snapshot(self, path: str) -> None:
        with self._lock:
            data = self.state.canonical_bytes()
        tmp = path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)

    @classmethod
    def open(cls, log_path: str, snapshot_path: Optional[str] = None) -> "Chain":
        """Rebuild from the block log; verify any snapshot against replay."""
        chain = cls.__new__(cls)
        chain.blocks = []
        chain.state = WorldState()
        chain._history = {}
        chain._tx_index = {}
        chain._lock = threading.RLock()
        chain._log_path = log_path
        chain._log_fh = None
        with open(log_path, "rb") as fh:
            data = fh.read()
        for payload in iter_framed(data):
            block = decode_block(payload)
            chain._apply(block)
        if snapshot_path is not None and os.path.exists(snapshot_path):
            with open(snapshot_path, "rb") as fh:
                stored = fh.read()
            if stored != chain.state.canonical_bytes():
                raise SnapshotMismatchError(
                    "world-state snapshot does not match block-log replay"
                )
        chain._log_fh = open(log_path, "ab")
        return chain


def decode_block(payload: bytes) -> Block:
    try:
        raw = json.loads(payload.decode("utf-8"))
        return Block.from_dict(raw)
    except Exception as exc:
        raise FramingError(f"undecodable block record: {exc}") from exc


def verify_chain_file(log_path: str) -> ChainReport:
    """Load a block log from disk and validate it.

    Any framing or decode failure counts as tamper detection and is
    reported with the index of the first unreadable record.
    """
    try:
        with open(log_path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        return ChainReport(False, None, "io-error", str(exc))
    chain = Chain()
    index = 0
    try:
        for payload in iter_framed(data):
            block = decode_block(payload)
            chain.blocks.append(block)
            index += 1
    except FramingError as exc:
        return ChainReport(False, index, "decode", str(exc))
    return chain.validate_chain()


def replay_world_state(blocks: Iterable[Block]) -> WorldState:
    """Fold the valid transactions' write sets from genesis forward."""
    state = WorldState()
    last = None
    for block in blocks:
        for index, tx in enumerate(block.transactions):
            if block.validity[index] != VALID:
                continue
            version = Version(block.number, index)
            for key, doc in tx.rwset.writes:
                state.apply_write(key, copy.deepcopy(doc) if doc is not None else None, version)
        last = Version(block.number, len(block.transactions) - 1)
    state.height = last
    return state
