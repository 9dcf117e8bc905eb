"""Travel booking: an agency chain books a hotel room and a train seat
atomically on two operator chains.

Inventory follows a router/item split: the desk contract routes each
booking to a per-date item store, and payment to the payer's own token
cell, so bookings for different dates or by different payers never contend
for the same lock. Booked item ids stay on the operator chain; the value
returned across chains is the fare, which is stable between the dry run
and live execution.
"""

from __future__ import annotations

import copy
import json
from importlib import resources

from ..fixtures import build_network
from ..ledger import Revert
from ..lockable import LockableStore
from ..orchestrator import Orchestrator
from ..simulator import Simulator
from . import ScenarioRun, make_relay


def load_config() -> dict:
    path = resources.files("crosschain.data").joinpath("hotel_train.json")
    return json.loads(path.read_text(encoding="utf-8"))


class BookingDesk:
    """Router on an operator chain; items are per-date stores, token cells
    are per-payer stores."""

    def book_and_pay(self, ctx, date: str, payer: str):
        item = f"item:{date}"
        free = ctx.call(item, "read", "free")
        if not free:
            raise Revert(f"no inventory left for {date}")
        fare = ctx.call(item, "read", "fare")
        booked = ctx.call(item, "read", "booked") or ()
        # the concrete unit id never leaves this chain
        unit = f"{date}#{free}"
        ctx.call(item, "write", "free", free - 1)
        ctx.call(item, "write", "booked", tuple(booked) + ((unit, payer),))
        cell = f"cell:{payer}"
        balance = ctx.call(cell, "read", "balance")
        if balance is None or balance < fare:
            raise Revert(f"{payer} cannot pay {fare}")
        ctx.call(cell, "write", "balance", balance - fare)
        paid = ctx.call(cell, "read", "paid_to_operator") or 0
        ctx.call(cell, "write", "paid_to_operator", paid + fare)
        return fare

    def availability(self, ctx, date: str):
        return ctx.call(f"item:{date}", "read", "free")


class TravelAgency:
    """Root-chain contract journalling each account's trips."""

    def __init__(self, hotel_chain: str, train_chain: str):
        self.hotel_chain = hotel_chain
        self.train_chain = train_chain

    def book_trip(self, ctx, account: str, date: str):
        hotel_fare = ctx.cross_call(self.hotel_chain, "desk", "book_and_pay", (date, account))
        train_fare = ctx.cross_call(self.train_chain, "desk", "book_and_pay", (date, account))
        store = f"trips:{account}"
        log = ctx.call(store, "read", "log") or ()
        ctx.call(store, "write", "log", tuple(log) + ((date, hotel_fare, train_fare),))
        spent = ctx.call(store, "read", "spent") or 0
        total = hotel_fare + train_fare
        ctx.call(store, "write", "spent", spent + total)
        return total


def _operator_chain(chain, config_side: dict, payers: dict) -> None:
    chain.add_contract("desk", BookingDesk())
    for date, item in config_side.items():
        chain.add_contract(
            f"item:{date}",
            LockableStore(owner="desk", initial={"free": item["free"], "fare": item["fare"]}),
        )
    for payer, balance in payers.items():
        chain.add_contract(
            f"cell:{payer}",
            LockableStore(owner="desk", initial={"balance": balance}),
        )


def _agency_chain(chain, accounts) -> None:
    chain.add_contract("agency", TravelAgency("hotel", "train"))
    for account in accounts:
        chain.add_contract(f"trips:{account}", LockableStore(owner="agency"))


def build_one_agency(variant="standard", mode="direct", relayers=1, config=None) -> ScenarioRun:
    config = copy.deepcopy(config or load_config())
    relay = make_relay(variant, mode, relayers)
    chains = build_network(["agency", "hotel", "train"], relay)
    by_id = {c.chain_id: c for c in chains}
    _operator_chain(by_id["hotel"], config["hotel"], config["balances"])
    _operator_chain(by_id["train"], config["train"], config["balances"])
    _agency_chain(by_id["agency"], config["balances"])
    sim = Simulator(chains, relay=relay)
    orch = Orchestrator(sim, relay, "agency", "acct-1")
    sim.add_listener(orch)
    date = sorted(config["hotel"])[0]
    return ScenarioRun(
        name="hotel_train",
        sim=sim,
        relay=relay,
        orchestrators=[orch],
        calls=[("agency", "agency", "book_trip", ("acct-1", date))],
        business_chains=("agency", "hotel", "train"),
        meta={"date": date, "config": config},
    )


def build_many_agencies(
    variant="standard", mode="direct", relayers=1, agencies=3, config=None
) -> ScenarioRun:
    """Independent agency chains booking different dates through the same
    hotel and train chains; the shared operator chains are the bottleneck."""
    config = copy.deepcopy(config or load_config())
    dates = sorted(config["hotel"])
    accounts = sorted(config["balances"])
    if agencies > min(len(dates), len(accounts)):
        raise ValueError("not enough dates/accounts configured for that many agencies")
    relay = make_relay(variant, mode, relayers)
    agency_ids = [f"agency{i + 1}" for i in range(agencies)]
    chains = build_network(agency_ids + ["hotel", "train"], relay)
    by_id = {c.chain_id: c for c in chains}
    _operator_chain(by_id["hotel"], config["hotel"], config["balances"])
    _operator_chain(by_id["train"], config["train"], config["balances"])
    sim = Simulator(chains, relay=relay)
    orchestrators = []
    calls = []
    for i, agency_id in enumerate(agency_ids):
        _agency_chain(by_id[agency_id], accounts)
        orch = Orchestrator(sim, relay, agency_id, accounts[i])
        sim.add_listener(orch)
        orchestrators.append(orch)
        calls.append((agency_id, "agency", "book_trip", (accounts[i], dates[i])))
    return ScenarioRun(
        name="hotel_train_many",
        sim=sim,
        relay=relay,
        orchestrators=orchestrators,
        calls=calls,
        business_chains=tuple(agency_ids) + ("hotel", "train"),
        meta={"dates": dates[:agencies], "config": config},
    )
