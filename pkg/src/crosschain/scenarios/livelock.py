"""Two calls that deterministically starve each other.

Call one reserves a slot on clearing1 and then, one level deeper, on
clearing2; call two does the same in the opposite order. Deepest segments
run first, so each call grabs its far store in wave one and then finds its
near store locked by the other call in wave two. Both roll back, both
retry with fresh call ids on the same cadence, and the dance repeats:
individual attempts always terminate (no deadlock), but neither call ever
commits while both keep retrying.
"""

from __future__ import annotations

from ..fixtures import build_network
from ..lockable import LockableStore
from ..orchestrator import Orchestrator
from ..simulator import Simulator
from . import ScenarioRun, make_relay


class ClearingStage:
    """Reserves a slot locally; chain_hold also reserves on the next hop."""

    def hold(self, ctx, tag: str):
        held = ctx.call("slots", "read", "held") or ()
        ctx.call("slots", "write", "held", tuple(held) + (tag,))
        return len(held) + 1

    def chain_hold(self, ctx, tag: str, next_chain: str):
        mine = self.hold(ctx, tag)
        theirs = ctx.cross_call(next_chain, "stage", "hold", (tag,))
        return mine + theirs


class Pipeline:
    def __init__(self, first_chain: str, second_chain: str):
        self.first_chain = first_chain
        self.second_chain = second_chain

    def run(self, ctx, tag: str):
        return ctx.cross_call(
            self.first_chain, "stage", "chain_hold", (tag, self.second_chain)
        )


def build(variant="standard", mode="direct", relayers=1, retries=9) -> ScenarioRun:
    relay = make_relay(variant, mode, relayers)
    chains = build_network(["bank1", "bank2", "clearing1", "clearing2"], relay)
    by_id = {c.chain_id: c for c in chains}
    by_id["bank1"].add_contract("pipeline", Pipeline("clearing1", "clearing2"))
    by_id["bank2"].add_contract("pipeline", Pipeline("clearing2", "clearing1"))
    for cid in ("clearing1", "clearing2"):
        by_id[cid].add_contract("stage", ClearingStage())
        by_id[cid].add_contract("slots", LockableStore(owner="stage"))
    sim = Simulator(chains, relay=relay)
    one = Orchestrator(sim, relay, "bank1", "desk-one", retries=retries)
    two = Orchestrator(sim, relay, "bank2", "desk-two", retries=retries)
    sim.add_listener(one)
    sim.add_listener(two)
    return ScenarioRun(
        name="livelock",
        sim=sim,
        relay=relay,
        orchestrators=[one, two],
        calls=[
            ("bank1", "pipeline", "run", ("one",)),
            ("bank2", "pipeline", "run", ("two",)),
        ],
        business_chains=("bank1", "bank2", "clearing1", "clearing2"),
    )
