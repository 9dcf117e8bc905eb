"""Whole-pipeline checks on a small hand-built two-chain network."""

import pytest

from crosschain.fixtures import build_network
from crosschain.ledger import Revert
from crosschain.lockable import LockableStore
from crosschain.orchestrator import COMMITTED, ROLLED_BACK, Orchestrator, plan
from crosschain.relay import Relay
from crosschain.simulator import Simulator


class Counter:
    """Business contract owning one lockable store."""

    def __init__(self, store: str):
        self.store = store

    def bump(self, ctx, key, amount):
        current = ctx.call(self.store, "read", key) or 0
        ctx.call(self.store, "write", key, current + amount)
        return current + amount

    def peek(self, ctx, key):
        return ctx.call(self.store, "read", key)


class Mirror:
    """Root-chain contract that copies a remote counter's value locally."""

    def __init__(self, store: str, remote_chain: str):
        self.store = store
        self.remote_chain = remote_chain

    def sync(self, ctx, key, amount):
        value = ctx.cross_call(self.remote_chain, "app", "bump", (key, amount))
        ctx.call(self.store, "write", key, value)
        return value


def build(variant="standard", mode="direct", relayers=1):
    relay = Relay(relayer_count=relayers, mode=mode, variant=variant)
    chains = build_network(["alpha", "beta"], relay)
    by_id = {c.chain_id: c for c in chains}
    by_id["alpha"].add_contract("app", Mirror("store", "beta"))
    by_id["alpha"].add_contract("store", LockableStore(owner="app"))
    by_id["beta"].add_contract("app", Counter("store"))
    by_id["beta"].add_contract("store", LockableStore(owner="app", initial={"k": 5}))
    sim = Simulator(chains, relay=relay)
    orch = Orchestrator(sim, relay, "alpha", "alice")
    sim.add_listener(orch)
    return sim, orch, by_id


def test_two_chain_commit():
    sim, orch, chains = build()
    orch.start_call("alpha", "app", "sync", ("k", 2))
    assert sim.run_until(lambda: orch.done, max_ticks=30)
    assert orch.outcome == COMMITTED
    assert orch.result == 7
    assert chains["beta"].contracts["store"].committed == {"k": 7}
    assert chains["alpha"].contracts["store"].committed == {"k": 7}
    # every lock is gone and records are tombstoned
    assert chains["beta"].contracts["store"].locked_by is None
    assert chains["alpha"].contracts["control"].call_state(orch.call_id) == "COMPLETE"


def test_two_chain_commit_scalable():
    sim, orch, chains = build(variant="scalable")
    orch.start_call("alpha", "app", "sync", ("k", 2))
    assert sim.run_until(lambda: orch.done, max_ticks=60)
    assert orch.outcome == COMMITTED
    assert chains["beta"].contracts["store"].committed == {"k": 7}


def test_simulation_pins_tree():
    sim, orch, chains = build()
    tree = orch.simulate("alpha", "app", "sync", ("k", 2))
    assert tree.expect == 7
    assert tree.writes  # the mirror writes its own store
    assert len(tree.children) == 1
    child = tree.children[0]
    assert (child.chain_id, child.contract, child.function) == ("beta", "app", "bump")
    assert child.expect == 7
    assert child.writes
    # the dry run leaves live state untouched
    assert chains["beta"].contracts["store"].committed == {"k": 5}


def test_plan_orders_phases():
    sim, orch, _ = build()
    tree = orch.simulate("alpha", "app", "sync", ("k", 2))
    phases = plan(tree)
    assert [op for op, _ in phases] == ["start", "segment", "root", "signal", "clean"]
    assert phases[1][1] == ((0,),)
    assert phases[3][1] == ((0,),)


def test_happy_path_cadence():
    # start@0, header@1, segment@2, header@3, root@4, header@5, signal@6,
    # header@7, clean@8 on one-tick chains
    sim, orch, chains = build()
    orch.start_call("alpha", "app", "sync", ("k", 2))
    sim.run(9)
    assert orch.done
    assert orch.completion_time == 8
    alpha = chains["alpha"]
    functions = {
        (b.header.timestamp, tx.function)
        for b in alpha.blocks
        for tx in b.txs
    }
    assert (0, "start") in functions
    assert (4, "root") in functions
    assert (8, "clean") in functions
    beta_functions = {
        (b.header.timestamp, tx.function)
        for b in chains["beta"].blocks
        for tx in b.txs
    }
    assert (2, "segment") in beta_functions
    assert (6, "signal") in beta_functions


def test_rollback_on_injected_fault():
    relay = Relay()
    chains = build_network(["alpha", "beta"], relay)
    by_id = {c.chain_id: c for c in chains}
    by_id["alpha"].add_contract("app", Mirror("store", "beta"))
    by_id["alpha"].add_contract("store", LockableStore(owner="app"))
    by_id["beta"].add_contract("app", Counter("store"))
    by_id["beta"].add_contract("store", LockableStore(owner="app", initial={"k": 5}))

    def fault(kind, chain_id, call_id, path):
        if kind == "segment_exec" and chain_id == "beta":
            return "revert"
        return None

    sim = Simulator(chains, relay=relay, fault_hook=fault)
    orch = Orchestrator(sim, relay, "alpha", "alice")
    sim.add_listener(orch)
    orch.start_call("alpha", "app", "sync", ("k", 2))
    assert sim.run_until(lambda: orch.done, max_ticks=40)
    assert orch.outcome == ROLLED_BACK
    assert by_id["beta"].contracts["store"].committed == {"k": 5}
    assert by_id["alpha"].contracts["store"].committed == {}
    assert by_id["beta"].contracts["store"].locked_by is None


def test_reach_check_rejects_foreign_chain():
    sim, orch, _ = build()
    orch.enterprise = {"alpha"}
    with pytest.raises(ValueError):
        orch.start_call("alpha", "app", "sync", ("k", 2))
