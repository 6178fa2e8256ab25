"""Role-scoped health-record contracts packaged as one chaincode.

Three contracts share the namespace: the admin contract owns record
creation, deletion, and the network-wide name listing; the patient
contract owns personal details, passwords, and the grant/revoke list;
the doctor contract owns the medical section for granted patients.
readPatient is common to all roles but returns a role-specific
projection, and nothing outside a projection ever leaves the chaincode.
"""

from __future__ import annotations

import hashlib
import hmac
import json

from ..errors import (
    ACCESS_DENIED,
    ALREADY_EXISTS,
    AUTH_FAILED,
    NOT_FOUND,
    VALIDATION,
    ChaincodeError,
)
from ..identity import Role
from .base import Chaincode, ChaincodeStub, require_args

CHAINCODE_NAME = "ehr"

PERSONAL_FIELDS = (
    "first_name",
    "last_name",
    "date_of_birth",
    "phone",
    "address",
    "emergency_contact",
)
MEDICAL_LIST_FIELDS = ("diagnoses", "medications", "treatment_notes")
MEDICAL_SCALAR_FIELDS = {"blood_group": str, "allergies": list}

PBKDF2_ITERATIONS = 10_000


def patient_key(patient_id: str) -> str:
    return f"patient~{patient_id}"


def doctor_key(doctor_id: str) -> str:
    return f"doctor~{doctor_id}"


def hash_password(password: str, salt: bytes) -> str:
    return hashlib.pbkdf2_hmac(
        "sha256", password.encode("utf-8"), salt, PBKDF2_ITERATIONS
    ).hex()


def _check_password(record: dict, password: str) -> bool:
    salt = bytes.fromhex(record["credentials"]["salt"])
    candidate = hash_password(password, salt)
    return hmac.compare_digest(candidate, record["credentials"]["password_hash"])


# -- role projections -------------------------------------------------------


def admin_view(record: dict) -> dict:
    """Names only: no medical, credential, or permission fields."""
    return {
        "patient_id": record["patient_id"],
        "first_name": record["personal"]["first_name"],
        "last_name": record["personal"]["last_name"],
    }


def doctor_view(record: dict) -> dict:
    """Name plus the medical section; no credentials, no grant list."""
    return {
        "patient_id": record["patient_id"],
        "first_name": record["personal"]["first_name"],
        "last_name": record["personal"]["last_name"],
        "medical": json.loads(json.dumps(record["medical"])),
    }


def patient_full_view(record: dict) -> dict:
    """The whole record minus the credential material."""
    view = json.loads(json.dumps(record))
    view.pop("credentials", None)
    return view


def _parse_json_arg(raw: str, what: str) -> dict:
    try:
        value = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ChaincodeError(VALIDATION, f"{what} is not valid JSON: {exc}") from None
    if not isinstance(value, dict):
        raise ChaincodeError(VALIDATION, f"{what} must be a JSON object")
    return value


def _parse_salt(raw: str) -> bytes:
    try:
        salt = bytes.fromhex(raw)
    except ValueError:
        raise ChaincodeError(VALIDATION, "salt must be hex-encoded") from None
    if len(salt) < 8:
        raise ChaincodeError(VALIDATION, "salt must be at least 8 bytes")
    return salt


class EhrChaincode(Chaincode):
    name = CHAINCODE_NAME

    def invoke(self, stub: ChaincodeStub, function: str, args: list[str]) -> str:
        handler = self._HANDLERS.get(function)
        if handler is None:
            raise ChaincodeError(VALIDATION, f"unknown function {function!r}")
        return handler(self, stub, args)

    # -- shared helpers ----------------------------------------------

    def _require_role(self, stub: ChaincodeStub, role: Role, method: str) -> None:
        if stub.caller.role != role:
            raise ChaincodeError(
                ACCESS_DENIED, f"{method} requires the {role.value} role"
            )

    def _require_self(self, stub: ChaincodeStub, patient_id: str, method: str) -> None:
        self._require_role(stub, Role.PATIENT, method)
        if stub.caller.subject_id != patient_id:
            raise ChaincodeError(ACCESS_DENIED, f"{method} is limited to the record owner")

    def _load_patient(self, stub: ChaincodeStub, patient_id: str) -> dict:
        record = stub.get_state(patient_key(patient_id))
        if record is None:
            raise ChaincodeError(NOT_FOUND, f"no patient record for {patient_id}")
        return record

    def _transient_secret(self, stub: ChaincodeStub, name: str) -> str:
        value = stub.transient.get(name)
        if not value:
            raise ChaincodeError(VALIDATION, f"missing transient field {name!r}")
        return value

    # -- admin contract ----------------------------------------------

    def create_patient(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 3, "patient_id, personal_json, salt_hex")
        self._require_role(stub, Role.ADMIN, "createPatient")
        patient_id, personal_raw, salt_raw = args
        if not patient_id:
            raise ChaincodeError(VALIDATION, "patient_id must be non-empty")
        personal = _parse_json_arg(personal_raw, "personal details")
        unknown = set(personal) - set(PERSONAL_FIELDS)
        if unknown:
            raise ChaincodeError(VALIDATION, f"unknown personal fields: {sorted(unknown)}")
        for field, value in personal.items():
            if not isinstance(value, str):
                raise ChaincodeError(VALIDATION, f"personal field {field!r} must be a string")
        salt = _parse_salt(salt_raw)
        password = self._transient_secret(stub, "password")
        if stub.get_state(patient_key(patient_id)) is not None:
            raise ChaincodeError(ALREADY_EXISTS, f"patient {patient_id} already exists")
        record = {
            "doc_type": "patient",
            "patient_id": patient_id,
            "personal": {field: personal.get(field, "") for field in PERSONAL_FIELDS},
            "credentials": {
                "password_hash": hash_password(password, salt),
                "salt": salt.hex(),
            },
            "medical": {
                "blood_group": "",
                "allergies": [],
                "diagnoses": [],
                "medications": [],
                "treatment_notes": [],
            },
            "permission_granted": [],
            "created_by": stub.caller.subject_id,
            "created_at": stub.timestamp,
        }
        stub.put_state(patient_key(patient_id), record)
        return json.dumps({"patient_id": patient_id})

    def delete_patient(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 1, "patient_id")
        self._require_role(stub, Role.ADMIN, "deletePatient")
        patient_id = args[0]
        self._load_patient(stub, patient_id)
        stub.delete_state(patient_key(patient_id))
        return json.dumps({"patient_id": patient_id, "deleted": True})

    def query_all_patients(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 0, "no arguments")
        self._require_role(stub, Role.ADMIN, "queryAllPatients")
        hits = stub.get_query_result({"doc_type": "patient"})
        views = [admin_view(doc) for _key, doc in hits]
        views.sort(key=lambda view: view["patient_id"])
        return json.dumps(views)

    def register_doctor(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 4, "doctor_id, display_name, department, salt_hex")
        self._require_role(stub, Role.ADMIN, "registerDoctor")
        doctor_id, display_name, department, salt_raw = args
        if not doctor_id:
            raise ChaincodeError(VALIDATION, "doctor_id must be non-empty")
        salt = _parse_salt(salt_raw)
        password = self._transient_secret(stub, "password")
        if stub.get_state(doctor_key(doctor_id)) is not None:
            raise ChaincodeError(ALREADY_EXISTS, f"doctor {doctor_id} already registered")
        entry = {
            "doc_type": "doctor",
            "doctor_id": doctor_id,
            "display_name": display_name,
            "department": department,
            "credentials": {
                "password_hash": hash_password(password, salt),
                "salt": salt.hex(),
            },
            "enrolled_at": stub.timestamp,
        }
        stub.put_state(doctor_key(doctor_id), entry)
        return json.dumps({"doctor_id": doctor_id})

    # -- common read --------------------------------------------------

    def read_patient(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 1, "patient_id")
        patient_id = args[0]
        caller = stub.caller
        if caller.role == Role.PATIENT and caller.subject_id != patient_id:
            raise ChaincodeError(ACCESS_DENIED, "patients may read their own record only")
        record = self._load_patient(stub, patient_id)
        if caller.role == Role.ADMIN:
            return json.dumps(admin_view(record))
        if caller.role == Role.PATIENT:
            return json.dumps(patient_full_view(record))
        if caller.role == Role.DOCTOR:
            if caller.subject_id not in record["permission_granted"]:
                raise ChaincodeError(
                    ACCESS_DENIED, f"doctor {caller.subject_id} has no grant from {patient_id}"
                )
            return json.dumps(doctor_view(record))
        raise ChaincodeError(ACCESS_DENIED, "readPatient requires a client role")

    # -- patient contract ---------------------------------------------

    def update_personal_details(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 2, "patient_id, changes_json")
        patient_id = args[0]
        self._require_self(stub, patient_id, "updatePersonalDetails")
        changes = _parse_json_arg(args[1], "personal changes")
        if not changes:
            raise ChaincodeError(VALIDATION, "empty change set")
        unknown = set(changes) - set(PERSONAL_FIELDS)
        if unknown:
            raise ChaincodeError(VALIDATION, f"unknown personal fields: {sorted(unknown)}")
        for field, value in changes.items():
            if not isinstance(value, str):
                raise ChaincodeError(VALIDATION, f"personal field {field!r} must be a string")
        record = self._load_patient(stub, patient_id)
        record["personal"].update(changes)
        stub.put_state(patient_key(patient_id), record)
        return json.dumps({"patient_id": patient_id, "updated": sorted(changes)})

    def update_password(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 2, "patient_id, new_salt_hex")
        patient_id = args[0]
        self._require_self(stub, patient_id, "updatePassword")
        new_salt = _parse_salt(args[1])
        old_password = self._transient_secret(stub, "old_password")
        new_password = self._transient_secret(stub, "new_password")
        record = self._load_patient(stub, patient_id)
        if not _check_password(record, old_password):
            raise ChaincodeError(AUTH_FAILED, "current password does not verify")
        record["credentials"] = {
            "password_hash": hash_password(new_password, new_salt),
            "salt": new_salt.hex(),
        }
        stub.put_state(patient_key(patient_id), record)
        return json.dumps({"patient_id": patient_id, "password_updated": True})

    def grant_access(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 2, "patient_id, doctor_id")
        patient_id, doctor_id = args
        self._require_self(stub, patient_id, "grantAccess")
        if stub.get_state(doctor_key(doctor_id)) is None:
            raise ChaincodeError(NOT_FOUND, f"doctor {doctor_id} is not in the directory")
        record = self._load_patient(stub, patient_id)
        granted = set(record["permission_granted"])
        granted.add(doctor_id)
        record["permission_granted"] = sorted(granted)
        stub.put_state(patient_key(patient_id), record)
        return json.dumps({"patient_id": patient_id, "granted": record["permission_granted"]})

    def revoke_access(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 2, "patient_id, doctor_id")
        patient_id, doctor_id = args
        self._require_self(stub, patient_id, "revokeAccess")
        record = self._load_patient(stub, patient_id)
        granted = set(record["permission_granted"])
        granted.discard(doctor_id)
        record["permission_granted"] = sorted(granted)
        stub.put_state(patient_key(patient_id), record)
        return json.dumps({"patient_id": patient_id, "granted": record["permission_granted"]})

    # -- doctor contract ----------------------------------------------

    def update_medical_details(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 2, "patient_id, delta_json")
        self._require_role(stub, Role.DOCTOR, "updateMedicalDetails")
        patient_id = args[0]
        delta = _parse_json_arg(args[1], "medical delta")
        if not delta:
            raise ChaincodeError(VALIDATION, "empty medical delta")
        allowed = set(MEDICAL_LIST_FIELDS) | set(MEDICAL_SCALAR_FIELDS)
        unknown = set(delta) - allowed
        if unknown:
            raise ChaincodeError(VALIDATION, f"unknown medical fields: {sorted(unknown)}")
        record = self._load_patient(stub, patient_id)
        if stub.caller.subject_id not in record["permission_granted"]:
            raise ChaincodeError(
                ACCESS_DENIED,
                f"doctor {stub.caller.subject_id} has no grant from {patient_id}",
            )
        medical = record["medical"]
        for field, value in delta.items():
            if field in MEDICAL_SCALAR_FIELDS:
                if not isinstance(value, MEDICAL_SCALAR_FIELDS[field]):
                    raise ChaincodeError(VALIDATION, f"bad type for medical field {field!r}")
                medical[field] = value
            else:
                if not isinstance(value, list) or not all(isinstance(e, dict) for e in value):
                    raise ChaincodeError(
                        VALIDATION, f"{field} entries must be a list of objects"
                    )
                for entry in value:
                    # provenance stamps are set here, never by callers
                    if "recorded_by" in entry or "recorded_at" in entry:
                        raise ChaincodeError(
                            VALIDATION, f"{field} entries may not set provenance stamps"
                        )
                    stamped = dict(entry)
                    stamped["recorded_by"] = stub.caller.subject_id
                    stamped["recorded_at"] = stub.timestamp
                    medical[field].append(stamped)
        stub.put_state(patient_key(patient_id), record)
        return json.dumps({"patient_id": patient_id, "updated": sorted(delta)})

    def list_granted_patients(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 0, "no arguments")
        self._require_role(stub, Role.DOCTOR, "listGrantedPatients")
        hits = stub.get_query_result(
            {"doc_type": "patient", "permission_granted": {"$contains": stub.caller.subject_id}}
        )
        views = [admin_view(doc) for _key, doc in hits]
        views.sort(key=lambda view: view["patient_id"])
        return json.dumps(views)

    # -- credential check (login support, role-agnostic) ---------------

    def verify_credentials(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 1, "principal_id")
        principal_id = args[0]
        password = self._transient_secret(stub, "password")
        record = stub.get_state(patient_key(principal_id))
        if record is None:
            record = stub.get_state(doctor_key(principal_id))
        if record is None:
            return json.dumps(False)
        return json.dumps(_check_password(record, password))

    _HANDLERS = {
        "createPatient": create_patient,
        "deletePatient": delete_patient,
        "queryAllPatients": query_all_patients,
        "registerDoctor": register_doctor,
        "readPatient": read_patient,
        "updatePersonalDetails": update_personal_details,
        "updatePassword": update_password,
        "grantAccess": grant_access,
        "revokeAccess": revoke_access,
        "updateMedicalDetails": update_medical_details,
        "listGrantedPatients": list_granted_patients,
        "verifyCredentials": verify_credentials,
    }
