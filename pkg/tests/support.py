"""Shared builders and oracles used across the test modules."""

from __future__ import annotations

import copy
import json
import os
import random
import time

from fastapi.testclient import TestClient

from ehrchain import netconfig
from ehrchain.chaincode import EhrChaincode, execute
from ehrchain.errors import ACCESS_DENIED, ChaincodeError
from ehrchain.gateway import create_app
from ehrchain.identity import Identity, Role
from ehrchain.ledger import (
    MVCC_CONFLICT,
    VALID,
    Block,
    StateKey,
    Version,
    WorldState,
)

GENESIS_TIME = 1735689600
DEFAULT_SEED = "5c" * 32
ADMIN_ID = "ADMIN001"
ADMIN_PASSWORD = "admin-pw"


class ManualClock:
    """Injectable clock; tests advance it explicitly."""

    def __init__(self, start: int = GENESIS_TIME):
        self.now = start

    def __call__(self) -> int:
        return self.now

    def advance(self, seconds: int) -> None:
        self.now += seconds


def make_network_config(
    *,
    seed: str = DEFAULT_SEED,
    genesis_time: int = GENESIS_TIME,
    policy: dict | None = None,
    max_block_txs: int = 10,
    block_timeout_ms: int = 150,
    port: int = 8460,
    token_ttl_seconds: int = 1800,
) -> netconfig.NetworkConfig:
    raw = {
        "network_name": "testnet",
        "genesis_time": genesis_time,
        "ca": {"ca_id": "ca.root", "seed": seed},
        "orgs": [
            {
                "name": "org1.providers",
                "peer_id": "peer0.org1",
                "admitted_roles": ["admin", "doctor"],
            },
            {
                "name": "org2.patients",
                "peer_id": "peer1.org2",
                "admitted_roles": ["patient"],
            },
        ],
        "channel": {
            "channel_id": "ehr-channel",
            "endorsement_policy": policy or {"rule": "all"},
            "max_block_txs": max_block_txs,
            "block_timeout_ms": block_timeout_ms,
        },
        "admin": {"id": ADMIN_ID, "password": ADMIN_PASSWORD},
        "gateway": {
            "host": "127.0.0.1",
            "port": port,
            "token_ttl_seconds": token_ttl_seconds,
        },
    }
    return netconfig.NetworkConfig.from_dict(raw)


def bootstrap_network(base_dir: str, **config_kwargs) -> tuple[netconfig.NetworkConfig, str]:
    config = make_network_config(**config_kwargs)
    data_dir = os.path.join(str(base_dir), "net")
    netconfig.bootstrap(config, data_dir)
    return config, data_dir


def login(client: TestClient, subject_id: str, password: str) -> str:
    response = client.post("/auth/login", json={"id": subject_id, "password": password})
    assert response.status_code == 200, response.text
    return response.json()["token"]


def bearer(token: str) -> dict:
    return {"Authorization": f"Bearer {token}"}


# ---------------------------------------------------------------------------
# Chaincode-level sandbox
# ---------------------------------------------------------------------------

EHR = EhrChaincode()

ADMIN = Identity("ADMIN001", "org1.providers", Role.ADMIN)
PATIENT1 = Identity("PID001", "org2.patients", Role.PATIENT)
PATIENT2 = Identity("PID002", "org2.patients", Role.PATIENT)
DOCTOR1 = Identity("DOC001", "org1.providers", Role.DOCTOR)
DOCTOR2 = Identity("DOC002", "org1.providers", Role.DOCTOR)


class Sandbox:
    """Execute-and-apply harness over a bare world state.

    Runs chaincode the way an endorsing peer would, then applies the
    write set the way the committer would, with a fresh version per
    call. No signatures or ordering involved.
    """

    def __init__(self, state: WorldState | None = None):
        self.state = state if state is not None else WorldState()
        self._block = 0

    def clone(self) -> "Sandbox":
        twin = Sandbox(WorldState())
        twin.state.entries = copy.deepcopy(self.state.entries)
        twin.state.height = self.state.height
        twin._block = self._block
        return twin

    def run(
        self,
        caller: Identity,
        function: str,
        args: list[str],
        transient: dict | None = None,
        timestamp: int = GENESIS_TIME,
    ):
        rwset, payload = execute(
            EHR, self.state.snapshot(), caller, function, list(args), timestamp, transient
        )
        self._block += 1
        for key, doc in rwset.writes:
            self.state.apply_write(key, doc, Version(self._block, 0))
        return json.loads(payload)


SALT = "ab" * 16


def seeded_sandbox() -> Sandbox:
    """PID001 (owner, granted DOC001), PID002 (other), two doctors."""
    box = Sandbox()
    box.run(ADMIN, "registerDoctor", ["DOC001", "Naledi Jacobs", "Cardiology", SALT],
            {"password": "doc001-pw"})
    box.run(ADMIN, "registerDoctor", ["DOC002", "Sipho Meyer", "Oncology", SALT],
            {"password": "doc002-pw"})
    box.run(ADMIN, "createPatient",
            ["PID001", json.dumps({"first_name": "Thando", "last_name": "Ngcobo"}), SALT],
            {"password": "pid001-pw"})
    box.run(ADMIN, "createPatient",
            ["PID002", json.dumps({"first_name": "Anele", "last_name": "Dlamini"}), SALT],
            {"password": "pid002-pw"})
    box.run(PATIENT1, "grantAccess", ["PID001", "DOC001"])
    return box


# ---------------------------------------------------------------------------
# Access matrix: 5 caller classes x 9 contract methods
# ---------------------------------------------------------------------------

CALLER_CLASSES = ["admin", "patient-self", "patient-other", "doctor-granted", "doctor-ungranted"]

_CALLERS = {
    "admin": ADMIN,
    "patient-self": PATIENT1,
    "patient-other": PATIENT2,
    "doctor-granted": DOCTOR1,
    "doctor-ungranted": DOCTOR2,
}

# Method -> (args builder, transient) targeting PID001 / a fresh id.
_MATRIX_CALLS = {
    "createPatient": (
        lambda: ["PIDNEW", json.dumps({"first_name": "New", "last_name": "Person"}), SALT],
        {"password": "new-pw"},
    ),
    "deletePatient": (lambda: ["PID001"], None),
    "queryAllPatients": (lambda: [], None),
    "readPatient": (lambda: ["PID001"], None),
    "updatePersonalDetails": (lambda: ["PID001", json.dumps({"phone": "+27-21-555-0000"})], None),
    "updatePassword": (
        lambda: ["PID001", SALT],
        {"old_password": "pid001-pw", "new_password": "pid001-next"},
    ),
    "grantAccess": (lambda: ["PID001", "DOC002"], None),
    "revokeAccess": (lambda: ["PID001", "DOC001"], None),
    "updateMedicalDetails": (
        lambda: ["PID001", json.dumps({"diagnoses": [{"code": "I10"}]})],
        None,
    ),
}

# Allow/deny oracle derived from the role rules: admin owns record
# lifecycle and the roster, the patient owns personal data, passwords,
# and grants on their own record, a granted doctor reads and writes
# medical data. readPatient is shared by admin, owner, granted doctor.
ACCESS_MATRIX_ORACLE = {
    "createPatient":         {"admin": "allow", "patient-self": "deny", "patient-other": "deny", "doctor-granted": "deny", "doctor-ungranted": "deny"},
    "deletePatient":         {"admin": "allow", "patient-self": "deny", "patient-other": "deny", "doctor-granted": "deny", "doctor-ungranted": "deny"},
    "queryAllPatients":      {"admin": "allow", "patient-self": "deny", "patient-other": "deny", "doctor-granted": "deny", "doctor-ungranted": "deny"},
    "readPatient":           {"admin": "allow", "patient-self": "allow", "patient-other": "deny", "doctor-granted": "allow", "doctor-ungranted": "deny"},
    "updatePersonalDetails": {"admin": "deny", "patient-self": "allow", "patient-other": "deny", "doctor-granted": "deny", "doctor-ungranted": "deny"},
    "updatePassword":        {"admin": "deny", "patient-self": "allow", "patient-other": "deny", "doctor-granted": "deny", "doctor-ungranted": "deny"},
    "grantAccess":           {"admin": "deny", "patient-self": "allow", "patient-other": "deny", "doctor-granted": "deny", "doctor-ungranted": "deny"},
    "revokeAccess":          {"admin": "deny", "patient-self": "allow", "patient-other": "deny", "doctor-granted": "deny", "doctor-ungranted": "deny"},
    "updateMedicalDetails":  {"admin": "deny", "patient-self": "deny", "patient-other": "deny", "doctor-granted": "allow", "doctor-ungranted": "deny"},
}


def enumerate_access_matrix() -> tuple[dict, dict]:
    """Run every (caller class, method) cell on a fresh state copy.

    Returns (observed, oracle). A cell observes "allow" when the call
    completes and "deny" when it raises access-denied; any other error
    is a harness bug and raises.
    """
    template = seeded_sandbox()
    observed: dict[str, dict[str, str]] = {}
    for method, (args_builder, transient) in _MATRIX_CALLS.items():
        observed[method] = {}
        for caller_class in CALLER_CLASSES:
            box = template.clone()
            try:
                box.run(_CALLERS[caller_class], method, args_builder(), transient)
            except ChaincodeError as exc:
                if exc.code != ACCESS_DENIED:
                    raise AssertionError(
                        f"{method} x {caller_class}: unexpected {exc.code}: {exc.message}"
                    ) from exc
                observed[method][caller_class] = "deny"
            else:
                observed[method][caller_class] = "allow"
    return observed, ACCESS_MATRIX_ORACLE


# ---------------------------------------------------------------------------
# Bare transaction factory for ledger and orderer tests
# ---------------------------------------------------------------------------

from ehrchain.identity import CertificateAuthority, generate_keypair  # noqa: E402
from ehrchain.ledger import ReadWriteSet, Transaction  # noqa: E402

_TEST_CA = CertificateAuthority.create("ca.test", seed=b"\x11" * 32, clock=lambda: 1000)
_TEST_CERT = _TEST_CA.issue("CLIENT1", "org1", Role.ADMIN, generate_keypair(b"\x22" * 32)[1])
_NONCE_COUNTER = 0


def make_tx(writes=None, reads=None, function="put", args=("k",), timestamp=1000) -> Transaction:
    """Self-consistent transaction for ledger-level tests.

    Signatures are opaque bytes here: chain validation covers hashes and
    tx id derivation, not endorsement, so a fixed signature suffices.
    """
    global _NONCE_COUNTER
    _NONCE_COUNTER += 1
    rwset = ReadWriteSet(reads=list(reads or []), writes=list(writes or []))
    tx = Transaction(
        tx_id="",
        channel_id="ehr-channel",
        creator=_TEST_CERT,
        chaincode_id="noop",
        function=function,
        args=tuple(args),
        nonce=_NONCE_COUNTER.to_bytes(24, "big"),
        timestamp=timestamp,
        rwset=rwset,
        endorsements=(),
        client_signature=b"\x00" * 64,
    )
    object.__setattr__(tx, "tx_id", tx.compute_tx_id())
    return tx


# ---------------------------------------------------------------------------
# Ledger oracles
# ---------------------------------------------------------------------------


def block_scan_history(blocks: list[Block], key: StateKey) -> list[tuple[str, int, dict | None]]:
    """History oracle: walk every block and collect valid writes to key."""
    events = []
    for block in blocks:
        for index, tx in enumerate(block.transactions):
            if block.validity[index] != VALID:
                continue
            for write_key, doc in tx.rwset.writes:
                if write_key == key:
                    events.append((tx.tx_id, block.number, copy.deepcopy(doc)))
    return events


def serial_reexecution_verdicts(pre_state: WorldState, block: Block, chaincode) -> list[str]:
    """Validity oracle: a transaction is valid iff re-simulating it
    serially at its block position reproduces its recorded rwset.

    Independent of the committer's version comparison: this one replays
    the chaincode itself against the serially evolving state.
    """
    state = WorldState()
    state.entries = copy.deepcopy(pre_state.entries)
    state.height = pre_state.height
    verdicts = []
    for index, tx in enumerate(block.transactions):
        caller = Identity(tx.creator.subject_id, tx.creator.org, tx.creator.role)
        rwset, _payload = execute(
            chaincode, state.snapshot(), caller, tx.function, list(tx.args), tx.timestamp, {}
        )
        if rwset.digest() == tx.rwset.digest():
            verdicts.append(VALID)
            for key, doc in rwset.writes:
                state.apply_write(key, doc, Version(block.number, index))
        else:
            verdicts.append(MVCC_CONFLICT)
    return verdicts


# ---------------------------------------------------------------------------
# The scripted end-to-end scenario
# ---------------------------------------------------------------------------

SCENARIO_PERSONAL = {
    "first_name": "Thando",
    "last_name": "Ngcobo",
    "date_of_birth": "1990-05-12",
    "phone": "+27-21-555-0199",
    "address": "8 Kloof Street, Cape Town",
    "emergency_contact": "Zola Ngcobo +27-82-555-0123",
}


def run_acceptance_scenario(base_dir: str) -> dict:
    """Scripted twelve-step flow, deterministic end to end.

    One transaction per block, a fixed clock, and a seeded CA make the
    final world state a pure function of this script, so it can be
    compared byte-for-byte against the checked-in fixture.
    """
    started = time.monotonic()
    config, data_dir = bootstrap_network(  # step 1: bootstrap
        base_dir, max_block_txs=1, block_timeout_ms=200
    )
    clock = lambda: GENESIS_TIME  # noqa: E731
    # seeded rng: salts and nonces become a pure function of the script,
    # which is what lets the final state match a checked-in fixture
    handle = netconfig.open_network(data_dir, clock=clock, rng=random.Random(2026))
    try:
        netconfig.seed_demo(handle)  # step 2: seed
        client = TestClient(create_app(handle))
        admin_tok = login(client, ADMIN_ID, ADMIN_PASSWORD)

        # step 3: admin creates PID001
        response = client.post(
            "/admin/patients",
            json={"patient_id": "PID001", "password": "pid001-initial",
                  "personal": SCENARIO_PERSONAL},
            headers=bearer(admin_tok),
        )
        assert response.status_code == 201, response.text

        # step 4: patient updates personal details
        patient_tok = login(client, "PID001", "pid001-initial")
        response = client.patch(
            "/patients/PID001/personal",
            json={"phone": "+27-21-555-0242", "address": "12 Harbour View, Cape Town"},
            headers=bearer(patient_tok),
        )
        assert response.status_code == 200, response.text

        # step 5: patient changes password
        response = client.patch(
            "/patients/PID001/password",
            json={"old_password": "pid001-initial", "new_password": "pid001-fresh"},
            headers=bearer(patient_tok),
        )
        assert response.status_code == 200, response.text
        patient_tok = login(client, "PID001", "pid001-fresh")

        # step 6: patient grants DOC001
        response = client.post(
            "/patients/PID001/grants",
            json={"doctor_id": "DOC001"},
            headers=bearer(patient_tok),
        )
        assert response.status_code == 200, response.text

        # step 7: doctor reads the record
        doctor_tok = login(client, "DOC001", netconfig.demo_password("DOC001"))
        response = client.get("/doctor/patients/PID001", headers=bearer(doctor_tok))
        assert response.status_code == 200, response.text
        assert response.json()["medical"]["diagnoses"] == []

        # step 8: doctor appends a diagnosis
        response = client.patch(
            "/doctor/patients/PID001/medical",
            json={"diagnoses": [{"code": "I10", "label": "essential hypertension"}],
                  "blood_group": "O+"},
            headers=bearer(doctor_tok),
        )
        assert response.status_code == 200, response.text

        # step 9: patient revokes DOC001
        response = client.delete(
            "/patients/PID001/grants/DOC001", headers=bearer(patient_tok)
        )
        assert response.status_code == 200, response.text

        # step 10: doctor read now denied
        response = client.get("/doctor/patients/PID001", headers=bearer(doctor_tok))
        assert response.status_code == 403, response.text

        # step 11: admin lists patients
        response = client.get("/admin/patients", headers=bearer(admin_tok))
        assert response.status_code == 200, response.text
        roster = [entry["patient_id"] for entry in response.json()["patients"]]
        assert roster == ["PID001", "PID002", "PID003", "PID004"], roster

        # step 12: patient reads own history
        response = client.get(
            "/explorer/patients/PID001/history", headers=bearer(patient_tok)
        )
        assert response.status_code == 200, response.text
        history_functions = [event["function"] for event in response.json()["events"]]
        assert history_functions == [
            "createPatient",
            "updatePersonalDetails",
            "updatePassword",
            "grantAccess",
            "updateMedicalDetails",
            "revokeAccess",
        ], history_functions

        state_bytes = handle.network.chain.state.canonical_bytes()
        elapsed = time.monotonic() - started
        return {
            "state_bytes": state_bytes,
            "elapsed": elapsed,
            "roster": roster,
            "history_functions": history_functions,
            "data_dir": data_dir,
        }
    finally:
        handle.close()
