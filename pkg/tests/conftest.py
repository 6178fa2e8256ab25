import json

import pytest
from fastapi.testclient import TestClient

import support
from ehrchain import netconfig
from ehrchain.gateway import create_app


@pytest.fixture
def clock():
    return support.ManualClock()


@pytest.fixture
def network_factory(tmp_path):
    """Bootstrap-and-open factory; every handle it returns is closed on teardown."""
    opened = []
    counter = 0

    def factory(*, clock=None, **config_kwargs):
        nonlocal counter
        counter += 1
        config, data_dir = support.bootstrap_network(
            tmp_path / f"net{counter}", **config_kwargs
        )
        handle = netconfig.open_network(data_dir, clock=clock)
        opened.append(handle)
        return handle

    yield factory
    for handle in opened:
        try:
            handle.close()
        except Exception:
            pass


@pytest.fixture
def handle(network_factory, clock):
    return network_factory(clock=clock)


@pytest.fixture
def gateway(handle):
    with TestClient(create_app(handle)) as client:
        yield client


def invoke_ok(handle, wallet, function, args, transient=None):
    """Invoke, wait for the receipt, and require a committed valid tx."""
    payload, future = handle.network.invoke(wallet, "ehr", function, args, transient)
    receipt = future.result(timeout=10)
    assert receipt.validity == "valid", (function, receipt.validity)
    return json.loads(payload), receipt


def query_json(handle, wallet, function, args, transient=None):
    proposal = handle.network.new_proposal(wallet, "ehr", function, args, transient)
    return json.loads(handle.network.query(proposal))
