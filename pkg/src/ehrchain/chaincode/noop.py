"""Minimal chaincode for throughput measurement and raw-state tests."""

from __future__ import annotations

import json

from ..errors import NOT_FOUND, VALIDATION, ChaincodeError
from .base import Chaincode, ChaincodeStub, require_args

CHAINCODE_NAME = "noop"


class NoopChaincode(Chaincode):
    name = CHAINCODE_NAME

    def invoke(self, stub: ChaincodeStub, function: str, args: list[str]) -> str:
        if function == "noop":
            require_args(args, 0, "no arguments")
            return json.dumps(None)
        if function == "put":
            require_args(args, 2, "key, value_json")
            key, raw = args
            try:
                value = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ChaincodeError(VALIDATION, f"value is not valid JSON: {exc}") from None
            if not isinstance(value, dict):
                raise ChaincodeError(VALIDATION, "value must be a JSON object")
            stub.put_state(key, value)
            return json.dumps({"key": key})
        if function == "get":
            require_args(args, 1, "key")
            value = stub.get_state(args[0])
            if value is None:
                raise ChaincodeError(NOT_FOUND, f"no value under {args[0]!r}")
            return json.dumps(value)
        if function == "delete":
            require_args(args, 1, "key")
            if stub.get_state(args[0]) is None:
                raise ChaincodeError(NOT_FOUND, f"no value under {args[0]!r}")
            stub.delete_state(args[0])
            return json.dumps({"key": args[0], "deleted": True})
        raise ChaincodeError(VALIDATION, f"unknown function {function!r}")
