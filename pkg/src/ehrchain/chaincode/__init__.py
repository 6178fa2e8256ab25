from .base import Chaincode, ChaincodeStub, execute
from .ehr import EhrChaincode
from .lifecycle import LifecycleChaincode
from .noop import NoopChaincode

__all__ = [
    "Chaincode",
    "ChaincodeStub",
    "execute",
    "EhrChaincode",
    "LifecycleChaincode",
    "NoopChaincode",
]
