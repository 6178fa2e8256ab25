"""Deterministic chaincode execution against a state snapshot.

A contract never touches the ledger directly: it reads and writes
through a stub that records every access into a read-write set. Reads
come from the snapshot only (writes staged in the same execution are
not visible), timestamps come from the transaction, and transient
values (raw passwords) are available to the code but never recorded.
"""

from __future__ import annotations

import copy
from abc import ABC, abstractmethod
from typing import Optional, Protocol

from ..errors import VALIDATION, ChaincodeError
from ..identity import Identity
from ..ledger import ReadWriteSet, StateKey, StateSnapshot, Version, rich_query, validate_document


class StateView(Protocol):
    """Read interface the stub needs; StateSnapshot satisfies it."""

    def get(self, key: StateKey) -> Optional[tuple[dict, Optional[Version]]]: ...

    def items(self): ...


class ChaincodeStub:
    def __init__(
        self,
        namespace: str,
        snapshot: StateView,
        caller: Identity,
        timestamp: int,
        transient: Optional[dict[str, str]] = None,
    ):
        self.namespace = namespace
        self.caller = caller
        self.timestamp = timestamp
        self.transient = dict(transient or {})
        self._snapshot = snapshot
        self._reads: dict[StateKey, Optional[Version]] = {}
        self._writes: dict[StateKey, Optional[dict]] = {}
        self._write_order: list[StateKey] = []

    def _record_read(self, key: StateKey, version: Optional[Version]) -> None:
        # First observation wins; re-reads of the same key add nothing.
        if key not in self._reads:
            self._reads[key] = version

    def get_state(self, key: str) -> Optional[dict]:
        state_key = StateKey(self.namespace, key)
        entry = self._snapshot.get(state_key)
        self._record_read(state_key, None if entry is None else entry[1])
        if entry is None:
            return None
        return copy.deepcopy(entry[0])

    def put_state(self, key: str, doc: dict) -> None:
        validate_document(doc)
        state_key = StateKey(self.namespace, key)
        if state_key not in self._writes:
            self._write_order.append(state_key)
        self._writes[state_key] = copy.deepcopy(doc)

    def delete_state(self, key: str) -> None:
        state_key = StateKey(self.namespace, key)
        if state_key not in self._writes:
            self._write_order.append(state_key)
        self._writes[state_key] = None

    def get_query_result(self, selector: dict) -> list[tuple[str, dict]]:
        """Selector query over the snapshot; every hit is recorded as a read."""
        results = []
        for state_key, doc in rich_query(self._snapshot, selector, self.namespace):
            entry = self._snapshot.get(state_key)
            self._record_read(state_key, entry[1] if entry else None)
            results.append((state_key.key, doc))
        return results

    def build_rwset(self) -> ReadWriteSet:
        reads = sorted(self._reads.items(), key=lambda item: item[0])
        writes = [(key, self._writes[key]) for key in self._write_order]
        return ReadWriteSet(reads=reads, writes=writes)


class Chaincode(ABC):
    name: str = ""

    @abstractmethod
    def invoke(self, stub: ChaincodeStub, function: str, args: list[str]) -> str:
        """Run one function; return a UTF-8 payload. Raise ChaincodeError to deny."""


def execute(
    chaincode: Chaincode,
    snapshot: StateView,
    caller: Identity,
    function: str,
    args: list[str],
    timestamp: int,
    transient: Optional[dict[str, str]] = None,
) -> tuple[ReadWriteSet, str]:
    """Simulate one invocation: (read-write set, result payload).

    Pure in the ledger's sense: the snapshot is never mutated, and the
    same (snapshot, caller, args, timestamp) always yields the same
    read-write set.
    """
    stub = ChaincodeStub(chaincode.name, snapshot, caller, timestamp, transient)
    payload = chaincode.invoke(stub, function, args)
    return stub.build_rwset(), payload


def require_args(args: list[str], count: int, usage: str) -> None:
    if len(args) != count:
        raise ChaincodeError(VALIDATION, f"expected {count} args: {usage}")
