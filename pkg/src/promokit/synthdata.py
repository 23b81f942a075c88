"""Deterministic synthetic receipts, promotions and store profiles with
planted, recoverable promotion effects.

Daily expected demand for a product is

    base * (1 + elasticity * price_change) * channel_lift
         * store_size_factor * seasonal_factor  (+ additive noise)

so a positive elasticity plants a monotone discount lift that a trained
model must recover in its feature importances. All randomness flows from
one PCG64 generator seeded by the config, making outputs byte-identical
across platforms for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta

import numpy as np

from .domain import (
    STORE_ATTRIBUTES,
    Channels,
    ProductRef,
    PromotionWindow,
    Receipt,
    ReceiptLine,
    SoldBy,
    StoreProfile,
)


class InvalidConfig(Exception):
    pass


DEFAULT_ATTR_RANGES: dict[str, tuple[float, float]] = {
    "inhabitants_1km": (500, 20000),
    "inhabitants_per_km2": (100, 5000),
    "inhabitants_5min_drive": (1000, 50000),
    "inhabitants_10min_drive": (5000, 200000),
    "inhabitants_500m": (100, 8000),
    "unemployment_rate": (0.02, 0.15),
    "cars_per_1000": (300, 700),
    "avg_monthly_salary": (2500, 9000),
    "tourism_ratio": (0.0, 0.3),
    "n_competitors": (0, 12),
    "competitor_distance": (0.1, 10.0),
    "purchasing_rate": (0.5, 1.5),
}


@dataclass
class GenConfig:
    seed: int = 0
    n_stores: int = 4
    n_products_per_group: int = 6
    groups: tuple[str, ...] = ("vegetables", "fruits", "dairy")
    start_year: int = 2016
    n_years: int = 3
    base_demand_range: tuple[float, float] = (4.0, 20.0)
    price_range: tuple[float, float] = (1.0, 12.0)
    promo_gap_days: tuple[int, int] = (10, 40)
    promo_price_changes: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5)
    channel_prob: float = 0.3
    elasticity: float = 3.0
    channel_lift: float = 0.15
    seasonal_amplitude: float = 0.15
    noise_level: float = 0.0
    receipts_per_day: int = 7
    attr_ranges: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_ATTR_RANGES)
    )

    def validate(self) -> None:
        if self.n_stores < 1 or self.n_products_per_group < 1 or not self.groups:
            raise InvalidConfig("counts must be >= 1")
        if self.n_years < 2:
            raise InvalidConfig("date span must cover at least 2 calendar years")
        if self.elasticity < 0:
            raise InvalidConfig("elasticity must be >= 0")
        if self.receipts_per_day < 2:
            raise InvalidConfig("need at least 2 receipts per day")
        missing = [a for a in STORE_ATTRIBUTES if a not in self.attr_ranges]
        if missing:
            raise InvalidConfig(f"missing attribute ranges: {missing}")


@dataclass
class GenResult:
    receipts: list[Receipt]
    promotions: list[PromotionWindow]
    stores: list[StoreProfile]
    catalog: list[ProductRef]
    #: noise-free expected avg daily units per promotion key
    expected_avg_amount: dict[tuple[str, str, Date], float]


def _seasonal(day: Date, amplitude: float) -> float:
    doy = day.timetuple().tm_yday
    return 1.0 + amplitude * np.sin(2 * np.pi * doy / 365.25)


def generate(config: GenConfig) -> GenResult:
    config.validate()
    rng = np.random.Generator(np.random.PCG64(config.seed))

    catalog: list[ProductRef] = []
    base_demand: dict[str, float] = {}
    regular_price: dict[str, float] = {}
    idx = 0
    for group in config.groups:
        for _ in range(config.n_products_per_group):
            pid = f"P{idx:03d}"
            sold_by = SoldBy.WEIGHT if idx % 2 else SoldBy.UNIT
            catalog.append(ProductRef(pid, group, sold_by))
            base_demand[pid] = float(rng.uniform(*config.base_demand_range))
            regular_price[pid] = round(float(rng.uniform(*config.price_range)), 2)
            idx += 1

    stores: list[StoreProfile] = []
    size_factor: dict[str, float] = {}
    for s in range(config.n_stores):
        sid = f"S{s:02d}"
        attrs = {
            name: round(float(rng.uniform(lo, hi)), 4)
            for name, (lo, hi) in config.attr_ranges.items()
        }
        stores.append(StoreProfile(sid, attrs))
        lo, hi = config.attr_ranges["inhabitants_1km"]
        size_factor[sid] = 0.6 + 0.8 * (attrs["inhabitants_1km"] - lo) / (hi - lo)

    first_day = Date(config.start_year, 1, 1)
    last_day = Date(config.start_year + config.n_years - 1, 12, 31)
    n_days = (last_day - first_day).days + 1

    promotions: list[PromotionWindow] = []
    # (store, product) -> {date: promotion}; promotions of one product in one
    # store never overlap by construction
    active: dict[tuple[str, str], dict[Date, PromotionWindow]] = {}
    for store in stores:
        for product in catalog:
            cal: dict[Date, PromotionWindow] = {}
            cursor = first_day + timedelta(days=int(rng.integers(0, 30)))
            while True:
                duration = int(rng.integers(1, 8))
                start = cursor
                end = start + timedelta(days=duration - 1)
                if end > last_day:
                    break
                pc = float(rng.choice(config.promo_price_changes))
                channels = Channels(*(bool(rng.random() < config.channel_prob) for _ in range(4)))
                promo = PromotionWindow(
                    store_id=store.store_id,
                    product_id=product.product_id,
                    start_date=start,
                    end_date=end,
                    promo_price=round(regular_price[product.product_id] * (1 - pc), 4),
                    price_change=pc,
                    channels=channels,
                )
                promotions.append(promo)
                for d in promo.days():
                    cal[d] = promo
                cursor = end + timedelta(days=int(rng.integers(*config.promo_gap_days)))
            active[(store.store_id, product.product_id)] = cal
    promotions.sort(key=lambda p: (p.start_date, p.store_id, p.product_id))

    def expected_units(store_id: str, pid: str, day: Date) -> float:
        promo = active[(store_id, pid)].get(day)
        lift = 1.0
        if promo is not None:
            lift = 1.0 + config.elasticity * promo.price_change
            lift *= 1.0 + config.channel_lift * sum(promo.channels.as_tuple())
        return (
            base_demand[pid]
            * lift
            * size_factor[store_id]
            * _seasonal(day, config.seasonal_amplitude)
        )

    receipts: list[Receipt] = []
    product_ids = [p.product_id for p in catalog]
    for store in stores:
        sid = store.store_id
        for offset in range(n_days):
            day = first_day + timedelta(days=offset)
            n_receipts = config.receipts_per_day + int(rng.integers(0, 3))
            baskets: list[list[ReceiptLine]] = [[] for _ in range(n_receipts)]
            for pid in product_ids:
                qty = expected_units(sid, pid, day)
                if config.noise_level > 0:
                    qty += config.noise_level * float(rng.normal())
                    qty = max(0.05, qty)
                n_hits = min(n_receipts, 1 + int(rng.integers(0, 3)))
                which = rng.choice(n_receipts, size=n_hits, replace=False)
                promo = active[(sid, pid)].get(day)
                price = promo.promo_price if promo is not None else regular_price[pid]
                for b in sorted(which.tolist()):
                    q = qty / n_hits
                    baskets[b].append(ReceiptLine(pid, q, round(q * price, 6)))
            for b, lines in enumerate(baskets):
                if not lines:
                    continue
                receipts.append(
                    Receipt(f"{sid}-{day.isoformat()}-{b}", sid, day, tuple(lines))
                )

    expected = {}
    for promo in promotions:
        total = sum(
            expected_units(promo.store_id, promo.product_id, d) for d in promo.days()
        )
        expected[promo.key] = total / promo.duration_days
    return GenResult(receipts, promotions, stores, catalog, expected)
