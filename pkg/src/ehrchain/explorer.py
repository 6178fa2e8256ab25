"""Read-only views over the committed chain.

Everything here is derived from blocks already on disk or in memory;
the explorer never signs, orders, or writes. Record history is the one
call that applies access rules, because the underlying key history
contains full documents.
"""

from __future__ import annotations

from typing import Optional

from .chaincode.ehr import admin_view, doctor_view, patient_full_view, patient_key
from .errors import ACCESS_DENIED, NOT_FOUND, ChaincodeError
from .identity import Identity, Role
from .ledger import VALID, Chain, StateKey

EHR_NAMESPACE = "ehr"

# History events a role is entitled to see, by the function that wrote them.
_ADMIN_EVENTS = {"createPatient", "deletePatient"}
_DOCTOR_EVENTS = {"updateMedicalDetails"}


class ExplorerService:
    def __init__(self, chain: Chain):
        self.chain = chain

    def get_chain_info(self) -> dict:
        """Height, head hash, and transaction counts by validity and chaincode."""
        total = 0
        valid = 0
        invalid = 0
        by_chaincode: dict[str, int] = {}
        height = self.chain.height
        latest_hash = None
        for number in range(height + 1):
            block = self.chain.get_block(number)
            latest_hash = block.block_hash
            for index, tx in enumerate(block.transactions):
                total += 1
                if block.validity[index] == VALID:
                    valid += 1
                else:
                    invalid += 1
                by_chaincode[tx.chaincode_id] = by_chaincode.get(tx.chaincode_id, 0) + 1
        return {
            "height": height,
            "latest_block_hash": latest_hash,
            "total_transactions": total,
            "valid_transactions": valid,
            "invalid_transactions": invalid,
            "transactions_by_chaincode": dict(sorted(by_chaincode.items())),
        }

    def get_block(self, number: int) -> Optional[dict]:
        block = self.chain.get_block(number)
        if block is None:
            return None
        return block.to_dict()

    def get_transaction(self, tx_id: str) -> Optional[dict]:
        found = self.chain.get_transaction(tx_id)
        if found is None:
            return None
        block, index = found
        return {
            "block_num": block.number,
            "tx_index": index,
            "validity": block.validity[index],
            "transaction": block.transactions[index].to_dict(),
        }

    def get_record_history(self, patient_id: str, viewer: Identity) -> list[dict]:
        """Valid writes that shaped one patient record, oldest first.

        The patient sees every event with the full (credential-free)
        document; the admin sees creation and deletion events with the
        name view; a doctor needs a current grant and sees only the
        medical-update events with the medical view.
        """
        key = StateKey(EHR_NAMESPACE, patient_key(patient_id))
        entries = self.chain.get_history_for_key(key)
        if not entries:
            raise ChaincodeError(NOT_FOUND, f"no history for patient {patient_id}")

        if viewer.role == Role.PATIENT:
            if viewer.subject_id != patient_id:
                raise ChaincodeError(ACCESS_DENIED, "patients may view their own history only")
            wanted = None
            project = patient_full_view
        elif viewer.role == Role.ADMIN:
            wanted = _ADMIN_EVENTS
            project = admin_view
        elif viewer.role == Role.DOCTOR:
            current = self.chain.snapshot().get(key)
            if current is None or viewer.subject_id not in current[0]["permission_granted"]:
                raise ChaincodeError(
                    ACCESS_DENIED, f"doctor {viewer.subject_id} has no grant from {patient_id}"
                )
            wanted = _DOCTOR_EVENTS
            project = doctor_view
        else:
            raise ChaincodeError(ACCESS_DENIED, "record history requires a client role")

        events = []
        for entry in entries:
            found = self.chain.get_transaction(entry.tx_id)
            block, index = found
            tx = block.transactions[index]
            if wanted is not None and tx.function not in wanted:
                continue
            deleted = entry.document is None
            events.append(
                {
                    "tx_id": entry.tx_id,
                    "block_num": entry.block_num,
                    "function": tx.function,
                    "timestamp": tx.timestamp,
                    "deleted": deleted,
                    "document": None if deleted else project(entry.document),
                }
            )
        return events
