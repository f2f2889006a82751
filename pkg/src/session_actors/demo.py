"""Warehouse demo: a seller that also restocks from a dealer.

The warehouse plays S in Purchase (with a customer B and an authenticator
A) and S in StoreLoad (with a dealer D), switching between the two roles
with ``become``. Customers and dealers are scripted so every scenario is
reproducible for a given scheduler seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .protocols import load
from .runtime import SELF, ActorSystem, RuntimeConfig, SessionActor, protocol, role

PURCHASE = load("purchase_loop")
STORELOAD = load("storeload")

SCENARIOS = (
    "happy-buy",
    "browse-quit",
    "restock",
    "violation-double-request",
    "violation-early-put",
)
CONFORMING = SCENARIOS[:3]


@protocol("c", PURCHASE, "S")
@protocol("c1", STORELOAD, "S")
class Warehouse(SessionActor):
    restock_amount = 5

    def __init__(self, stock: Optional[dict] = None, prices: Optional[dict] = None):
        self.purchaseDB = dict(stock if stock is not None else {"apple": 5, "pear": 3})
        self.prices = dict(prices if prices is not None else {"apple": 3, "pear": 4})
        self.tokens: dict[str, str] = {}
        self.pending: list[str] = []

    @role("c", "B")
    def login(self, c, user):
        c.send("A", "login", user)

    @role("c", "A")
    def authenticate(self, c, token):
        self.tokens[c.session] = token

    @role("c", "B")
    def request(self, c, product):
        c.send("B", "", self.prices.get(product, 0))

    @role("c", "B")
    def buy(self, c, product):
        self.purchaseDB[product] = self.purchaseDB.get(product, 0) - 1
        c.send("B", "delivery", f"{product} x1")
        if self.purchaseDB[product] <= 0:
            self.restock(product)

    @role("c", "B")
    def quit(self, c):
        pass

    def restock(self, product: str) -> None:
        c1 = self.context("c1")
        if c1 is not None and c1.started:
            self.become(c1, "update", product)
            return
        self.pending.append(product)
        if c1 is None:
            self.start_session(STORELOAD, role="S")

    def join(self, ctx):
        if ctx.slot == "c1" and self.pending:
            self.become(ctx, "update", self.pending.pop(0))

    @role("c1", SELF)
    def update(self, c1, product):
        c1.send("D", "request", product, self.restock_amount)

    @role("c1", "D")
    def put(self, c1, product, n):
        self.purchaseDB[product] = self.purchaseDB.get(product, 0) + n
        if self.pending:
            self.become(c1, "update", self.pending.pop(0))
        else:
            c1.send("D", "quit")

    @role("c1", "D")
    def acc(self, c1):
        pass


@protocol("c", PURCHASE, "B")
class Customer(SessionActor):
    def __init__(self, script=("request:apple", "buy:apple"), user: str = "alice"):
        self.script = list(script)
        self.user = user
        self.quotes: list[int] = []
        self.delivered: list[str] = []

    def join(self, c):
        c.send("S", "login", self.user)

    @role("c", "A")
    def authenticate(self, c, token):
        self.next_move(c)

    @role("c", "S", label="")
    def quote(self, c, price):
        self.quotes.append(price)
        self.next_move(c)

    @role("c", "S")
    def delivery(self, c, details):
        self.delivered.append(details)

    def next_move(self, c) -> None:
        move, _, product = (self.script.pop(0) if self.script else "quit").partition(":")
        if move == "quit":
            c.send("S", "quit")
        else:
            c.send("S", move, product)


@protocol("c", PURCHASE, "A")
class AuthService(SessionActor):
    @role("c", "S")
    def login(self, c, user):
        token = f"token-{user}"
        c.send("B", "authenticate", token)
        c.send("S", "authenticate", token)


@protocol("c1", STORELOAD, "D")
class Dealer(SessionActor):
    @role("c1", "S")
    def request(self, c1, product, n):
        c1.send("S", "put", product, n)

    @role("c1", "S")
    def quit(self, c1):
        c1.send("S", "acc")


@protocol("c", PURCHASE, "S")
@protocol("c1", STORELOAD, "S")
class DoubleRequestWarehouse(Warehouse):
    """Faulty seller: issues two consecutive restock requests."""

    @role("c1", SELF)
    def update(self, c1, product):
        c1.send("D", "request", product, self.restock_amount)
        c1.send("D", "request", product, self.restock_amount)


@protocol("c1", STORELOAD, "D")
class EarlyPutDealer(Dealer):
    """Rogue dealer with its own checking disabled: delivers before being asked."""

    monitored = False

    def join(self, c1):
        c1.send("S", "put", "apple", 1)


@dataclass
class DemoRun:
    scenario: str
    system: ActorSystem
    warehouse: Warehouse
    customer: Customer

    @property
    def exit_code(self) -> int:
        s = self.system
        return 1 if (s.violations or s.faults) else 0

    def transcript(self) -> str:
        return "".join(line + "\n" for line in self.system.transcript_lines())


def run_scenario(
    scenario: str,
    seed: int = 0,
    policy: str = "halt",
    parallel: bool = False,
    join_timeout_ms: int = 5000,
    system_cls: type = ActorSystem,
) -> DemoRun:
    """Run one scripted scenario to quiescence; ``system_cls`` lets tests instrument the runtime."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    system = system_cls(
        RuntimeConfig(policy=policy, seed=seed, parallel=parallel, join_timeout_ms=join_timeout_ms)
    )
    warehouse_type = DoubleRequestWarehouse if scenario == "violation-double-request" else Warehouse
    dealer_type = EarlyPutDealer if scenario == "violation-early-put" else Dealer
    for t in (warehouse_type, Customer, AuthService, dealer_type):
        system.register(t)

    stock = {"apple": 1, "pear": 3} if scenario in ("restock", "violation-double-request") else None
    script = {
        "browse-quit": ("request:apple", "request:pear", "quit"),
    }.get(scenario, ("request:apple", "buy:apple"))
    warehouse = system.spawn(warehouse_type, stock=stock)
    customer = system.spawn(Customer, script=script)
    system.spawn(AuthService)
    system.spawn(dealer_type)

    if scenario == "violation-early-put":
        warehouse.start_session(STORELOAD, role="S")
    system.start_session(PURCHASE)
    system.run()
    return DemoRun(scenario, system, warehouse, customer)
