"""Deterministic multi-chain clock.

One tick is one time unit. At each tick every chain whose period divides
the time seals a block (chains in chain_id order), the relay reacts to the
freshly sealed blocks, then listeners (orchestrators and the like) run.
Anything submitted during a tick lands in the next block a chain seals, so
two runs with the same inputs produce byte-identical traces.
"""

from __future__ import annotations

import json

from .ledger import Block, Chain


def trace_record(block: Block) -> str:
    return json.dumps(
        {
            "chain_id": block.header.chain_id,
            "block_number": block.header.number,
            "timestamp": block.header.timestamp,
            "tx_count": len(block.txs),
            "receipt_root": block.header.receipt_root.hex(),
        },
        sort_keys=True,
        separators=(",", ":"),
    )


class Simulator:
    def __init__(self, chains: list[Chain], relay=None, trace_path=None, fault_hook=None):
        self.chains: dict[str, Chain] = {}
        for chain in sorted(chains, key=lambda c: c.chain_id):
            if chain.chain_id in self.chains:
                raise ValueError(f"duplicate chain id {chain.chain_id!r}")
            self.chains[chain.chain_id] = chain
            chain.fault_hook = fault_hook
        self.relay = relay
        self.listeners: list = []
        self.now = -1
        self.trace: list[str] = []
        self._trace_path = trace_path
        if relay is not None:
            relay.bind(self)

    def add_listener(self, listener) -> None:
        self.listeners.append(listener)

    def chain(self, chain_id: str) -> Chain:
        return self.chains[chain_id]

    def step(self) -> list[Block]:
        t = self.now + 1
        sealed = []
        for chain in self.chains.values():
            if t % chain.block_period == 0:
                sealed.append(chain.seal_block(t))
        for block in sealed:
            self.trace.append(trace_record(block))
        if self.relay is not None:
            self.relay.on_blocks_sealed(self, t, sealed)
        for listener in self.listeners:
            listener.on_tick(self, t)
        self.now = t
        return sealed

    def run(self, ticks: int) -> None:
        for _ in range(ticks):
            self.step()
        if self._trace_path is not None:
            self.flush_trace()

    def run_until(self, predicate, max_ticks: int = 10_000) -> bool:
        """Step until predicate() is true; False when the budget runs out."""
        for _ in range(max_ticks):
            if predicate():
                return True
            self.step()
        return predicate()

    def flush_trace(self) -> None:
        with open(self._trace_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.trace) + ("\n" if self.trace else ""))
