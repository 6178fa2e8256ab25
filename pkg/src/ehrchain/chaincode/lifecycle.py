"""System chaincode recording channel configuration and deployments.

The genesis block carries a createChannel invocation whose argument is
the serialized channel config; deployChaincode entries give every
application chaincode a ledgered activation record. Both are admin-only.
"""

from __future__ import annotations

import json

from ..errors import ACCESS_DENIED, ALREADY_EXISTS, VALIDATION, ChaincodeError
from ..identity import Role
from .base import Chaincode, ChaincodeStub, require_args

CHAINCODE_NAME = "_lifecycle"
CHANNEL_KEY = "channel"


def chaincode_key(name: str) -> str:
    return f"chaincode~{name}"


class LifecycleChaincode(Chaincode):
    name = CHAINCODE_NAME

    def invoke(self, stub: ChaincodeStub, function: str, args: list[str]) -> str:
        if stub.caller.role != Role.ADMIN:
            raise ChaincodeError(ACCESS_DENIED, "lifecycle operations require the admin role")
        if function == "createChannel":
            return self._create_channel(stub, args)
        if function == "deployChaincode":
            return self._deploy_chaincode(stub, args)
        raise ChaincodeError(VALIDATION, f"unknown function {function!r}")

    def _create_channel(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 1, "config_json")
        try:
            config = json.loads(args[0])
        except json.JSONDecodeError as exc:
            raise ChaincodeError(VALIDATION, f"channel config is not valid JSON: {exc}") from None
        if not isinstance(config, dict):
            raise ChaincodeError(VALIDATION, "channel config must be a JSON object")
        if stub.get_state(CHANNEL_KEY) is not None:
            raise ChaincodeError(ALREADY_EXISTS, "channel already configured")
        stub.put_state(CHANNEL_KEY, config)
        return json.dumps({"channel_id": config.get("channel_id")})

    def _deploy_chaincode(self, stub: ChaincodeStub, args: list[str]) -> str:
        require_args(args, 2, "name, version")
        name, version = args
        if not name:
            raise ChaincodeError(VALIDATION, "chaincode name must be non-empty")
        existing = stub.get_state(chaincode_key(name))
        if existing is not None and existing.get("version") == version:
            raise ChaincodeError(ALREADY_EXISTS, f"{name} {version} already deployed")
        stub.put_state(
            chaincode_key(name),
            {"name": name, "version": version, "deployed_at": stub.timestamp},
        )
        return json.dumps({"name": name, "version": version})
