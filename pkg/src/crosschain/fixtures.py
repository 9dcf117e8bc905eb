"""Shared wiring for simulated networks.

Every chain carries the control contract at address "control" and the
header registry at "headers"; the scalable variant adds a dedicated header
chain holding the record journal. Business contracts come from scenarios.
"""

from __future__ import annotations

from .crosscontrol import ControlContract
from .ledger import Chain
from .relay import SCALABLE, HeaderJournal, HeaderRegistry, Relay


def build_chain(chain_id: str, relay: Relay, period: int = 1) -> Chain:
    chain = Chain(chain_id, period)
    chain.add_contract("control", ControlContract())
    chain.add_contract(
        "headers",
        HeaderRegistry(relay.registry_keys(), relay.threshold, relay.variant),
    )
    return chain


def build_network(chain_ids, relay: Relay, periods: dict | None = None) -> list[Chain]:
    periods = periods or {}
    chains = [build_chain(cid, relay, periods.get(cid, 1)) for cid in chain_ids]
    if relay.variant == SCALABLE:
        bhb = Chain(relay.bhb_chain_id, periods.get(relay.bhb_chain_id, 1))
        bhb.add_contract("records", HeaderJournal())
        chains.append(bhb)
    return chains
