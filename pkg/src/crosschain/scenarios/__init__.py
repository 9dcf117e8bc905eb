"""Ready-made multi-chain networks used by tests, the fuzz harness and the CLI.

Each builder returns a ScenarioRun: a simulator wired with a relay, one
orchestrator per intended call, and the calls themselves (not yet
started). Callers launch() the calls and step the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..lockable import LockableStore
from ..orchestrator import Orchestrator
from ..relay import Relay
from ..simulator import Simulator


@dataclass
class ScenarioRun:
    name: str
    sim: Simulator
    relay: Relay
    orchestrators: list[Orchestrator]
    calls: list[tuple]  # aligned with orchestrators: (chain, contract, function, args)
    business_chains: tuple = ()
    meta: dict = field(default_factory=dict)

    def launch(self) -> None:
        for orch, call in zip(self.orchestrators, self.calls):
            orch.start_call(*call)

    def run_to_completion(self, max_ticks: int = 400) -> bool:
        return self.sim.run_until(
            lambda: all(o.done for o in self.orchestrators), max_ticks
        )

    def business_state(self) -> dict:
        """Committed contents of every lockable store on business chains."""
        state: dict = {}
        for cid in self.business_chains:
            contracts = self.sim.chains[cid].contracts
            state[cid] = {
                addr: dict(obj.committed)
                for addr, obj in contracts.items()
                if isinstance(obj, LockableStore)
            }
        return state

    def quiescent(self) -> bool:
        """No store is locked and nothing provisional is left anywhere."""
        for cid in self.business_chains:
            for obj in self.sim.chains[cid].contracts.values():
                if isinstance(obj, LockableStore):
                    if obj.locked_by is not None or obj.provisional:
                        return False
        return True


def make_relay(variant: str = "standard", mode: str = "direct", relayers: int = 1) -> Relay:
    return Relay(relayer_count=relayers, mode=mode, variant=variant)


from . import hotel_train, livelock, oracle_trade, supply_chain  # noqa: E402

BUILDERS = {
    "hotel_train": hotel_train.build_one_agency,
    "hotel_train_many": hotel_train.build_many_agencies,
    "supply_chain": supply_chain.build,
    "oracle": oracle_trade.build,
    "livelock": livelock.build,
}


def build(name: str, **kwargs) -> ScenarioRun:
    if name not in BUILDERS:
        raise KeyError(f"unknown scenario {name!r}; pick from {sorted(BUILDERS)}")
    return BUILDERS[name](**kwargs)
