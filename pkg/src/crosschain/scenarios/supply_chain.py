"""Two-chain shipment journal: a factory dispatch entry and the matching
warehouse intake entry commit together or not at all.
"""

from __future__ import annotations

from ..fixtures import build_network
from ..lockable import LockableStore
from ..orchestrator import Orchestrator
from ..simulator import Simulator
from . import ScenarioRun, make_relay


class Receiver:
    def receive(self, ctx, sku: str, qty: int):
        entries = ctx.call("intake_log", "read", "entries") or ()
        ctx.call("intake_log", "write", "entries", tuple(entries) + ((sku, qty),))
        return len(entries) + 1  # intake sequence number


class Dispatcher:
    def __init__(self, warehouse_chain: str):
        self.warehouse_chain = warehouse_chain

    def record_shipment(self, ctx, sku: str, qty: int):
        intake_no = ctx.cross_call(self.warehouse_chain, "receiver", "receive", (sku, qty))
        entries = ctx.call("dispatch_log", "read", "entries") or ()
        ctx.call("dispatch_log", "write", "entries", tuple(entries) + ((sku, qty, intake_no),))
        return intake_no


def build(variant="standard", mode="direct", relayers=1) -> ScenarioRun:
    relay = make_relay(variant, mode, relayers)
    chains = build_network(["factory", "warehouse"], relay)
    by_id = {c.chain_id: c for c in chains}
    by_id["factory"].add_contract("dispatcher", Dispatcher("warehouse"))
    by_id["factory"].add_contract("dispatch_log", LockableStore(owner="dispatcher"))
    by_id["warehouse"].add_contract("receiver", Receiver())
    by_id["warehouse"].add_contract("intake_log", LockableStore(owner="receiver"))
    sim = Simulator(chains, relay=relay)
    orch = Orchestrator(sim, relay, "factory", "plant-ops")
    sim.add_listener(orch)
    return ScenarioRun(
        name="supply_chain",
        sim=sim,
        relay=relay,
        orchestrators=[orch],
        calls=[("factory", "dispatcher", "record_shipment", ("widget-7", 25))],
        business_chains=("factory", "warehouse"),
    )
