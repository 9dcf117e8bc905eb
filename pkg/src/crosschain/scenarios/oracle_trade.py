"""Fund rebalancing against a read-only price feed on another chain.

The feed segment takes no locks, so the call needs no signal afterwards.
The dry run pins the price the fund's sizing logic saw; if the feed moves
between the dry run and the live segment, the pinned result no longer
matches and the whole call rolls back instead of buying at a price the
plan never considered.
"""

from __future__ import annotations

from ..fixtures import build_network
from ..ledger import Revert
from ..lockable import LockableStore
from ..orchestrator import Orchestrator
from ..simulator import Simulator
from . import ScenarioRun, make_relay


class PriceFeed:
    def __init__(self, prices: dict):
        self.prices = dict(prices)

    def get_price(self, ctx, symbol: str):
        price = self.prices.get(symbol)
        if price is None:
            raise Revert(f"no price for {symbol}")
        return price

    def set_price(self, ctx, symbol: str, price: int):
        self.prices[symbol] = price
        return None


class Fund:
    def __init__(self, market_chain: str):
        self.market_chain = market_chain

    def rebalance(self, ctx, symbol: str, budget: int):
        price = ctx.cross_call(self.market_chain, "feed", "get_price", (symbol,))
        qty = budget // price
        ctx.call("positions", "write", symbol, {"qty": qty, "price": price})
        return qty


def build(variant="standard", mode="direct", relayers=1, prices=None) -> ScenarioRun:
    relay = make_relay(variant, mode, relayers)
    chains = build_network(["fund", "market"], relay)
    by_id = {c.chain_id: c for c in chains}
    by_id["market"].add_contract("feed", PriceFeed(prices or {"XCU": 50}))
    by_id["fund"].add_contract("manager", Fund("market"))
    by_id["fund"].add_contract("positions", LockableStore(owner="manager"))
    sim = Simulator(chains, relay=relay)
    orch = Orchestrator(sim, relay, "fund", "fund-ops")
    sim.add_listener(orch)
    return ScenarioRun(
        name="oracle",
        sim=sim,
        relay=relay,
        orchestrators=[orch],
        calls=[("fund", "manager", "rebalance", ("XCU", 1000))],
        business_chains=("fund", "market"),
    )
