"""Transaction-count cost model and throughput estimates.

Closed forms for one call, standard variant:

  root chain     3 protocol txs (start, root, clean)
                 + 1 header registration per segment (its event header)
                 + 1 more per updating segment (its signal's event header)
  segment chain  1 segment tx (+1 signal if it locked stores)
                 + 1 registration for the start header
                 + 1 registration for the root header if anything locked

The scalable variant needs no per-call registrations: per call only the
protocol txs remain, and every chain instead absorbs one round-root tx per
round, which costs throughput a flat 1/block_period.

Call rate = how many calls per second a chain sustains at base_tps raw
transactions per second, i.e. base_tps divided by the bottleneck chain's
per-call transaction count (minus the round-root overhead when scalable).

Observed counts come from sealed blocks, so tests can require the model
and the simulator to agree transaction for transaction.
"""

from __future__ import annotations

from dataclasses import dataclass

PROTOCOL_FUNCTIONS = ("start", "segment", "root", "signal", "clean")
REGISTRATION_FUNCTIONS = ("submit_header", "submit_header_multi")
ROUND_ROOT_FUNCTION = "submit_round_root"


@dataclass(frozen=True)
class SegmentShape:
    chain_id: str
    updating: bool


@dataclass(frozen=True)
class ScenarioShape:
    name: str
    root_chain: str
    segments: tuple[SegmentShape, ...]
    # True when each call brings its own root chain (root chains scale out
    # horizontally) and only the shared segment chains can bottleneck
    root_scales_out: bool = False


SHAPES = {
    "hotel_train": ScenarioShape(
        "hotel_train",
        "agency",
        (SegmentShape("hotel", True), SegmentShape("train", True)),
    ),
    "hotel_train_many": ScenarioShape(
        "hotel_train_many",
        "agency",
        (SegmentShape("hotel", True), SegmentShape("train", True)),
        root_scales_out=True,
    ),
    "supply_chain": ScenarioShape(
        "supply_chain", "factory", (SegmentShape("warehouse", True),)
    ),
    "oracle": ScenarioShape("oracle", "fund", (SegmentShape("market", False),)),
}


def chain_counts(shape: ScenarioShape, variant: str) -> dict[str, int]:
    """Per-chain transactions attributable to one call."""
    standard = variant == "standard"
    root = 3
    if standard:
        root += sum(2 if seg.updating else 1 for seg in shape.segments)
    counts = {shape.root_chain: root}
    for seg in shape.segments:
        n = 2 if seg.updating else 1  # segment tx, plus its signal if it locked
        if standard:
            n += 1  # start header registration
            n += 1 if seg.updating else 0  # root header registration
        counts[seg.chain_id] = counts.get(seg.chain_id, 0) + n
    return counts


def bottleneck(shape: ScenarioShape, variant: str) -> tuple[str, int]:
    counts = chain_counts(shape, variant)
    if shape.root_scales_out:
        counts = {c: n for c, n in counts.items() if c != shape.root_chain}
    chain = max(counts, key=lambda c: (counts[c], c))
    return chain, counts[chain]


def call_rate(
    base_tps: float, per_call_txs: int, variant: str, block_period: float = 1.0
) -> float:
    """Sustained calls per second on the bottleneck chain."""
    rate = base_tps / per_call_txs
    if variant != "standard":
        rate -= 1.0 / block_period
    return rate


def throughput_table(base_tps: float = 375.0, block_period: float = 1.0) -> dict:
    """Call rate per scenario and variant at the given raw chain speed."""
    table = {}
    for name in ("hotel_train", "hotel_train_many", "supply_chain", "oracle"):
        shape = SHAPES[name]
        for variant in ("standard", "scalable"):
            _, txs = bottleneck(shape, variant)
            table[(name, variant)] = call_rate(base_tps, txs, variant, block_period)
    return table


# ----------------------------------------------------------------------
# observed side

def observed_chain_counts(sim, include_round_roots: bool = False) -> dict[str, int]:
    """Transactions sealed per chain, protocol + registrations; round-root
    txs are the per-block overhead and excluded unless asked for."""
    counts: dict[str, int] = {}
    for cid, chain in sim.chains.items():
        total = 0
        for block in chain.blocks:
            for tx in block.txs:
                if tx.function == ROUND_ROOT_FUNCTION and not include_round_roots:
                    continue
                total += 1
        counts[cid] = total
    return counts


def observed_round_root_txs(sim, chain_id: str) -> list[int]:
    """Round-root txs per block on one chain."""
    per_block = []
    for block in sim.chains[chain_id].blocks:
        per_block.append(
            sum(1 for tx in block.txs if tx.function == ROUND_ROOT_FUNCTION)
        )
    return per_block
