import copy
import json
import os

import pytest

import support
from ehrchain import netconfig
from ehrchain.identity import IssuanceError, Role
from ehrchain.ledger import Chain, SnapshotMismatchError, StateKey
from ehrchain.netconfig import (
    AlreadyInitializedError,
    BootstrapError,
    ConfigError,
    NetworkConfig,
    anchored_clock,
    bootstrap,
    check_admin_password,
    dump_config,
    enroll_offline,
    load_config,
    open_network,
    seed_demo,
)


def raw_config_dict():
    return {
        "network_name": "testnet",
        "genesis_time": support.GENESIS_TIME,
        "ca": {"ca_id": "ca.root", "seed": support.DEFAULT_SEED},
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
            "endorsement_policy": {"rule": "all"},
            "max_block_txs": 10,
            "block_timeout_ms": 150,
        },
        "admin": {"id": "ADMIN001", "password": "admin-pw"},
        "gateway": {"host": "127.0.0.1", "port": 8460, "token_ttl_seconds": 1800},
    }


class TestConfigParsing:
    def test_round_trip_through_yaml(self, tmp_path):
        config = NetworkConfig.from_dict(raw_config_dict())
        path = str(tmp_path / "network.yaml")
        dump_config(config, path)
        assert load_config(path) == config

    def test_multiple_errors_itemized(self):
        raw = raw_config_dict()
        raw["network_name"] = ""
        raw["ca"]["seed"] = "xyz"
        raw["gateway"]["port"] = "not-a-port"
        with pytest.raises(ConfigError) as err:
            NetworkConfig.from_dict(raw)
        text = "\n".join(err.value.errors)
        assert len(err.value.errors) >= 3
        assert "network_name" in text and "seed" in text and "port" in text

    def test_unknown_role_rejected(self):
        raw = raw_config_dict()
        raw["orgs"][0]["admitted_roles"] = ["admin", "wizard"]
        with pytest.raises(ConfigError) as err:
            NetworkConfig.from_dict(raw)
        assert any("wizard" in e for e in err.value.errors)

    def test_infra_roles_not_admittable(self):
        raw = raw_config_dict()
        raw["orgs"][0]["admitted_roles"] = ["admin", "peer"]
        with pytest.raises(ConfigError):
            NetworkConfig.from_dict(raw)

    def test_duplicate_org_names_rejected(self):
        raw = raw_config_dict()
        raw["orgs"][1]["name"] = raw["orgs"][0]["name"]
        with pytest.raises(ConfigError) as err:
            NetworkConfig.from_dict(raw)
        assert any("unique" in e for e in err.value.errors)

    def test_duplicate_peer_ids_rejected(self):
        raw = raw_config_dict()
        raw["orgs"][1]["peer_id"] = raw["orgs"][0]["peer_id"]
        with pytest.raises(ConfigError):
            NetworkConfig.from_dict(raw)

    def test_some_org_must_admit_admin(self):
        raw = raw_config_dict()
        raw["orgs"][0]["admitted_roles"] = ["doctor"]
        with pytest.raises(ConfigError) as err:
            NetworkConfig.from_dict(raw)
        assert any("admin" in e for e in err.value.errors)

    def test_bad_policy_rejected(self):
        raw = raw_config_dict()
        raw["channel"]["endorsement_policy"] = {"rule": "any", "n": 0}
        with pytest.raises(ConfigError):
            NetworkConfig.from_dict(raw)

    def test_bad_seed_length_rejected(self):
        raw = raw_config_dict()
        raw["ca"]["seed"] = "ab" * 16  # 16 bytes, must be 32
        with pytest.raises(ConfigError):
            NetworkConfig.from_dict(raw)

    def test_org_for_role(self):
        config = NetworkConfig.from_dict(raw_config_dict())
        assert config.org_for_role(Role.PATIENT).name == "org2.patients"
        assert config.org_for_role(Role.ADMIN).name == "org1.providers"

    def test_yaml_parse_error_reported(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("orgs: [unclosed")
        with pytest.raises(ConfigError):
            load_config(str(path))


class TestBootstrap:
    def test_summary_and_files(self, tmp_path):
        config = support.make_network_config()
        summary = bootstrap(config, str(tmp_path / "net"))
        # genesis is block 0, deployments land in block 1
        assert summary["height"] == 1
        assert summary["network_name"] == "testnet"
        for name in ("chain.log", "state.json", "ca.json", "network.yaml",
                     "gateway.json", "admin_auth.json"):
            assert os.path.exists(tmp_path / "net" / name), name

    def test_deterministic_given_seed_and_genesis_time(self, tmp_path):
        config = support.make_network_config()
        bootstrap(config, str(tmp_path / "a"))
        bootstrap(copy.deepcopy(config), str(tmp_path / "b"))
        for name in ("chain.log", "state.json", "ca.json"):
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b, f"{name} differs between identical bootstraps"

    def test_already_initialized(self, tmp_path):
        config = support.make_network_config()
        bootstrap(config, str(tmp_path / "net"))
        with pytest.raises(AlreadyInitializedError):
            bootstrap(config, str(tmp_path / "net"))

    def test_failure_rolls_back(self, tmp_path, monkeypatch):
        config = support.make_network_config()
        target = str(tmp_path / "net")

        def explode(self, path):
            raise RuntimeError("disk on fire")

        monkeypatch.setattr(Chain, "save_state_snapshot", explode)
        with pytest.raises((BootstrapError, RuntimeError)):
            bootstrap(config, target)
        monkeypatch.undo()
        leftovers = set(os.listdir(target)) if os.path.exists(target) else set()
        assert "chain.log" not in leftovers and "ca.json" not in leftovers
        # a clean retry succeeds
        bootstrap(config, target)

    def test_genesis_in_bootstrapped_chain(self, tmp_path):
        config = support.make_network_config()
        data_dir = str(tmp_path / "net")
        bootstrap(config, data_dir)
        chain = Chain.open(os.path.join(data_dir, "chain.log"))
        assert chain.blocks[0].transactions[0].function == "createChannel"
        deployed = {tx.function for tx in chain.blocks[1].transactions}
        assert deployed == {"deployChaincode"}
        assert chain.state.get(StateKey("_lifecycle", "chaincode~ehr")) is not None

    def test_admin_password_hashed_not_stored(self, tmp_path):
        config = support.make_network_config()
        data_dir = str(tmp_path / "net")
        bootstrap(config, data_dir)
        with open(os.path.join(data_dir, "admin_auth.json")) as fh:
            text = fh.read()
        assert "admin-pw" not in text
        assert check_admin_password(data_dir, "admin-pw")
        assert not check_admin_password(data_dir, "wrong")
        # the on-disk network config also omits the password
        with open(os.path.join(data_dir, "network.yaml")) as fh:
            assert "admin-pw" not in fh.read()


class TestOpenNetwork:
    def test_reopen_preserves_chain(self, tmp_path, clock):
        config, data_dir = support.bootstrap_network(tmp_path)
        handle = open_network(data_dir, clock=clock)
        try:
            admin = handle.admin_wallet()
            _payload, future = handle.network.invoke(
                admin, "noop", "put", ["k1", '{"v": 1}']
            )
            assert future.result(timeout=10).validity == "valid"
            height = len(handle.network.chain.blocks)
        finally:
            handle.close()

        again = open_network(data_dir, clock=clock)
        try:
            assert len(again.network.chain.blocks) == height
            report = again.network.chain.validate_chain()
            assert report.ok
        finally:
            again.close()

    def test_snapshot_mismatch_detected(self, tmp_path, clock):
        config, data_dir = support.bootstrap_network(tmp_path)
        snap_path = os.path.join(data_dir, "state.json")
        with open(snap_path) as fh:
            doc = json.load(fh)
        doc["entries"][0][2] = {"doc_type": "forged"}
        with open(snap_path, "w") as fh:
            json.dump(doc, fh)
        with pytest.raises(SnapshotMismatchError):
            open_network(data_dir, clock=clock)

    def test_default_clock_keeps_old_network_usable(self, tmp_path):
        # pinned genesis far in the past: certificates would look
        # expired under wall time, so opening anchors the clock there
        config, data_dir = support.bootstrap_network(tmp_path, genesis_time=946684800)
        handle = open_network(data_dir)  # no explicit clock
        try:
            admin = handle.admin_wallet()
            _payload, future = handle.network.invoke(admin, "noop", "put", ["k", "{}"])
            assert future.result(timeout=10).validity == "valid"
        finally:
            handle.close()

    def test_anchored_clock_monotonic_from_start(self):
        tick = anchored_clock(1000)
        first = tick()
        assert first >= 1000
        assert tick() >= first


class TestEnrollment:
    def test_enroll_and_reload(self, tmp_path, clock):
        config, data_dir = support.bootstrap_network(tmp_path)
        cert = enroll_offline(data_dir, "PID010", Role.PATIENT, clock=clock)
        assert cert.subject_id == "PID010" and cert.role is Role.PATIENT
        assert cert.org == "org2.patients"

        handle = open_network(data_dir, clock=clock)
        try:
            wallet = handle.wallet("PID010", Role.PATIENT)
            assert wallet is not None
            assert wallet.certificate == cert
        finally:
            handle.close()

    def test_enroll_offline_duplicate_rejected(self, tmp_path, clock):
        config, data_dir = support.bootstrap_network(tmp_path)
        enroll_offline(data_dir, "PID010", Role.PATIENT, clock=clock)
        with pytest.raises(IssuanceError):
            enroll_offline(data_dir, "PID010", Role.PATIENT, clock=clock)

    def test_enroll_client_idempotent(self, handle):
        first = handle.enroll_client("PID011", Role.PATIENT)
        second = handle.enroll_client("PID011", Role.PATIENT)
        assert first.certificate == second.certificate

    def test_revoke_client(self, handle):
        handle.enroll_client("PID012", Role.PATIENT)
        assert handle.revoke_client("PID012", Role.PATIENT) is True
        assert handle.wallet("PID012", Role.PATIENT) is None
        assert handle.revoke_client("PID012", Role.PATIENT) is False
        # revocation survives a CA reload via persisted state
        assert handle.ca.find_active("PID012", Role.PATIENT) is None

    def test_reenroll_after_revoke_gets_new_serial(self, handle):
        first = handle.enroll_client("PID013", Role.PATIENT)
        handle.revoke_client("PID013", Role.PATIENT)
        second = handle.enroll_client("PID013", Role.PATIENT)
        assert second.certificate.serial > first.certificate.serial


class TestSeedDemo:
    def test_demo_contents(self, handle):
        seed_demo(handle)
        admin = handle.admin_wallet()
        listed = json.loads(
            handle.network.query(
                handle.network.new_proposal(admin, "ehr", "queryAllPatients", [])
            )
        )
        assert [p["patient_id"] for p in listed] == ["PID002", "PID003", "PID004"]
        for doctor_id, _name, _dept in netconfig.DEMO_DOCTORS:
            assert handle.wallet(doctor_id, Role.DOCTOR) is not None
        # the demo ships one standing grant so doctor flows work out of
        # the box
        doc2 = handle.wallet("DOC002", Role.DOCTOR)
        granted = json.loads(
            handle.network.query(
                handle.network.new_proposal(doc2, "ehr", "listGrantedPatients", [])
            )
        )
        assert [p["patient_id"] for p in granted] == ["PID002"]

    def test_demo_credentials_verify(self, handle):
        seed_demo(handle)
        admin = handle.admin_wallet()
        for pid in ("PID002", "PID003", "PID004", "DOC001", "DOC002"):
            verified = json.loads(
                handle.network.query(
                    handle.network.new_proposal(
                        admin, "ehr", "verifyCredentials", [pid],
                        {"password": netconfig.demo_password(pid)},
                    )
                )
            )
            assert verified is True, pid
