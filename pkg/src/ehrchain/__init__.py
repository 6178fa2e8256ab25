"""Permissioned ledger platform for electronic health records.

A single-process network: a certificate authority and membership rules,
a hash-chained block store with a versioned document world state, an
execute-order-validate transaction pipeline with MVCC commit checks,
role-scoped EHR smart contracts, a REST gateway, and a chain explorer.
"""

__version__ = "0.1.0"
