"""Relay modes, message accounting, and the round-root pipeline."""

import pytest

from crosschain import merkle
from crosschain.fixtures import build_network
from crosschain.ledger import Chain, Revert, header_from_value
from crosschain.relay import (
    HeaderRegistry,
    Relay,
    relayer_secret,
    sign,
)
from crosschain.simulator import Simulator


def make_sim(mode="direct", n=1, variant="standard", **kw):
    relay = Relay(relayer_count=n, mode=mode, variant=variant, **kw)
    chains = build_network(["dst", "dst2", "src"], relay)
    sim = Simulator(chains, relay=relay)
    sim.run(1)  # block 0 everywhere
    return sim, relay


def sample_header(chain_id="x"):
    return Chain(chain_id).seal_block(0).header


# ---------------------------------------------------------------------------
# message accounting


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_direct_mode_counts(n):
    """No relayer-to-relayer traffic; every relayer submits on its own."""
    sim, relay = make_sim("direct", n)
    relay.request("src", 0, "dst")
    assert relay.stats.inter_relay_messages == 0
    assert relay.stats.header_txs == n
    relay.request("src", 0, "dst2")
    assert relay.stats.inter_relay_messages == 0
    assert relay.stats.header_txs == 2 * n


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_broadcast_mode_counts(n):
    """Signatures are swapped once per header, whatever the fan-out."""
    sim, relay = make_sim("broadcast", n)
    relay.request("src", 0, "dst")
    assert relay.stats.inter_relay_messages == n * (n - 1)
    assert relay.stats.header_txs == 1
    relay.request("src", 0, "dst2")
    assert relay.stats.inter_relay_messages == n * (n - 1)
    assert relay.stats.header_txs == 2


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_on_demand_mode_counts(n):
    sim, relay = make_sim("on_demand", n)
    relay.request("src", 0, "dst")
    assert relay.stats.inter_relay_messages == 2 * (n - 1)
    assert relay.stats.header_txs == 1


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_on_demand_every_relayer_asking(n):
    sim, relay = make_sim("on_demand", n, on_demand_requesters=n)
    relay.request("src", 0, "dst")
    assert relay.stats.inter_relay_messages == 2 * n * (n - 1)


def test_duplicate_requests_cost_nothing():
    sim, relay = make_sim("broadcast", 4)
    relay.request("src", 0, "dst")
    before = (relay.stats.inter_relay_messages, relay.stats.header_txs)
    relay.request("src", 0, "dst")
    assert (relay.stats.inter_relay_messages, relay.stats.header_txs) == before


def test_unknown_mode_rejected():
    sim, relay = make_sim("direct", 1)
    relay.mode = "pigeon"
    with pytest.raises(ValueError):
        relay.request("src", 0, "dst")


# ---------------------------------------------------------------------------
# registry acceptance rules


def keys_for(n):
    names = [f"relayer-{i}" for i in range(n)]
    return {name: relayer_secret(name) for name in names}


def test_threshold_counts_distinct_voters():
    keys = keys_for(3)
    reg = HeaderRegistry(keys, threshold=2)
    header = sample_header()
    sig = sign(keys["relayer-0"], header.digest)
    reg.submit_header(None, header.value(), "relayer-0", sig)
    reg.submit_header(None, header.value(), "relayer-0", sig)  # same voter again
    assert not reg.usable(None, header.value())
    reg.submit_header(None, header.value(), "relayer-1", sign(keys["relayer-1"], header.digest))
    assert reg.usable(None, header.value())


def test_forged_signature_rejected():
    keys = keys_for(2)
    reg = HeaderRegistry(keys, threshold=1)
    header = sample_header()
    with pytest.raises(Revert, match="signature"):
        reg.submit_header(None, header.value(), "relayer-0", b"\x00" * 32)
    with pytest.raises(Revert, match="signature"):
        # a key the registry never heard of
        reg.submit_header(None, header.value(), "mallory", sign(relayer_secret("mallory"), header.digest))


def test_multi_needs_threshold_signatures():
    keys = keys_for(3)
    reg = HeaderRegistry(keys, threshold=3)
    header = sample_header()
    sigs = {r: sign(k, header.digest) for r, k in list(keys.items())[:2]}
    with pytest.raises(Revert, match="threshold"):
        reg.submit_header_multi(None, header.value(), sigs)
    sigs = {r: sign(k, header.digest) for r, k in keys.items()}
    reg.submit_header_multi(None, header.value(), sigs)
    assert reg.usable(None, header.value())


def test_latest_timestamp_tracks_maximum():
    sim, relay = make_sim("direct", 1)
    src = sim.chains["src"]
    relay.request("src", 0, "dst")
    sim.run(2)  # registration lands, src seals block 1 and 2
    relay.request("src", 2, "dst")
    sim.run(1)
    registry = sim.chains["dst"].contracts["headers"]
    assert registry.latest_timestamp(None, "src") == 2
    assert registry.latest_timestamp(None, "elsewhere") is None


def test_direct_delivery_lands_next_block():
    sim, relay = make_sim("direct", 3, threshold=2)
    header = sim.chains["src"].blocks[0].header
    relay.request("src", 0, "dst")
    registry = sim.chains["dst"].contracts["headers"]
    assert not registry.usable(None, header.value())
    sim.run(1)
    assert registry.usable(None, header.value())


# ---------------------------------------------------------------------------
# scalable variant: record on the header chain, prove against round roots


def test_round_pipeline_timing():
    sim, relay = make_sim(variant="scalable")
    header = sim.chains["src"].blocks[0].header  # sealed at t=0
    registry = sim.chains["dst"].contracts["headers"]
    # t=0: header sealed, nothing provable yet
    assert relay.header_proof(header.digest) is None
    sim.run(1)  # t=1: header chain records it; round root still in flight
    proof = relay.header_proof(header.digest)
    assert proof is not None
    assert not registry.usable(None, header.value(), proof)
    sim.run(1)  # t=2: round root landed on dst
    assert registry.usable(None, header.value(), relay.header_proof(header.digest))


def test_round_roots_match_header_chain_blocks():
    sim, relay = make_sim(variant="scalable")
    sim.run(4)
    registry = sim.chains["dst"].contracts["headers"]
    bhb = sim.chains[relay.bhb_chain_id]
    # one root per header-chain block, in order, even for empty rounds
    assert len(registry.round_roots) == len(bhb.blocks) - 1
    for i, root in enumerate(registry.round_roots):
        recorded = sorted(
            (
                header_from_value(tx.args[0])
                for tx, r in zip(bhb.blocks[i].txs, bhb.blocks[i].receipts)
                if tx.function == "record" and r.status == "COMMITTED"
            ),
            key=lambda h: (h.chain_id, h.number),
        )
        assert root == merkle.build_root([h.digest for h in recorded])
    # round 0 had nothing recorded yet its root was still pushed
    assert registry.round_roots[0] == merkle.EMPTY_ROOT


def test_usable_needs_a_proof_in_scalable_mode():
    sim, relay = make_sim(variant="scalable")
    sim.run(3)
    header = sim.chains["src"].blocks[0].header
    registry = sim.chains["dst"].contracts["headers"]
    assert not registry.usable(None, header.value(), None)
    assert not registry.usable(None, header.value(), (99, 0, (), 1))  # round out of range
    assert registry.usable(None, header.value(), relay.header_proof(header.digest))


def test_request_is_noop_in_scalable_mode():
    sim, relay = make_sim(variant="scalable")
    relay.request("src", 0, "dst")
    assert relay.stats.header_txs == 0
    assert relay.stats.inter_relay_messages == 0


def test_round_root_txs_counted():
    sim, relay = make_sim(variant="scalable")
    sim.run(3)
    # one root tx per business chain per round, submitted as each round seals
    business = [cid for cid in sim.chains if cid != relay.bhb_chain_id]
    rounds = len(sim.chains[relay.bhb_chain_id].blocks)
    assert relay.stats.root_txs == rounds * len(business)
