import random
from datetime import date as Date
from datetime import timedelta

import pytest

from promokit.domain import IndicatorKind, PromotionWindow, Receipt, ReceiptLine
from promokit.indicators import NoHitReceipts, compute_indicators


def oracle(window, receipts):
    """Independent brute-force re-derivation of all six indicators."""
    days = set(window.days())
    inside = [r for r in receipts if r.store_id == window.store_id and r.date in days]
    hits = [
        r for r in inside
        if window.product_id in {l.product_id for l in r.lines}
    ]
    if not hits:
        raise NoHitReceipts(window)
    d = window.duration_days
    qty = sum(l.quantity for r in hits for l in r.lines
              if l.product_id == window.product_id)
    baskets = [sum(l.line_value for l in r.lines) for r in hits]
    without = [
        sum(l.line_value for l in r.lines if l.product_id != window.product_id)
        for r in hits
    ]
    uniques = [len({l.product_id for l in r.lines}) for r in hits]
    return {
        IndicatorKind.AVG_AMOUNT: qty / d,
        IndicatorKind.AVG_NB_RECEIPTS: len(hits) / d,
        IndicatorKind.AVG_BASKET: sum(baskets) / len(hits),
        IndicatorKind.AVG_BASKET_WITHOUT_ITEM: sum(without) / len(hits),
        IndicatorKind.AVG_NB_UNIQUE_ITEMS: sum(uniques) / len(hits),
        IndicatorKind.AVG_NB_CLIENTS: len(inside) / d,
    }


def random_fixture(seed, max_receipts=500):
    """Random receipts around a random promotion window."""
    rnd = random.Random(seed)
    start = Date(2017, 1, 1) + timedelta(days=rnd.randrange(300))
    window = PromotionWindow(
        store_id="S1",
        product_id="P0",
        start_date=start,
        end_date=start + timedelta(days=rnd.randrange(7)),
        promo_price=round(rnd.uniform(0.5, 9), 2),
        price_change=rnd.choice([0.1, 0.25, 0.5]),
    )
    products = [f"P{i}" for i in range(6)]
    receipts = []
    for i in range(rnd.randrange(1, max_receipts + 1)):
        day = start + timedelta(days=rnd.randrange(-3, 10))
        store = rnd.choice(["S1", "S1", "S2"])
        lines = tuple(
            ReceiptLine(p, round(rnd.uniform(0.1, 5), 3), round(rnd.uniform(0, 20), 2))
            for p in rnd.sample(products, rnd.randrange(1, 5))
        )
        receipts.append(Receipt(f"R{i}", store, day, lines))
    return window, receipts


APPLE_WINDOW = PromotionWindow(
    store_id="S1",
    product_id="apple",
    start_date=Date(2017, 6, 5),
    end_date=Date(2017, 6, 6),
    promo_price=1.0,
    price_change=0.2,
)

APPLE_RECEIPTS = [
    Receipt("R1", "S1", Date(2017, 6, 5),
            (ReceiptLine("apple", 2.0, 2.0), ReceiptLine("milk", 1.0, 2.0))),
    Receipt("R2", "S1", Date(2017, 6, 5), (ReceiptLine("bread", 1.0, 1.5),)),
    Receipt("R3", "S1", Date(2017, 6, 6), (ReceiptLine("apple", 3.0, 3.0),)),
]


class TestWorkedExample:
    def test_apple_fixture(self):
        vals = compute_indicators(APPLE_WINDOW, APPLE_RECEIPTS)
        assert vals[IndicatorKind.AVG_AMOUNT] == 2.5
        assert vals[IndicatorKind.AVG_NB_RECEIPTS] == 1.0
        assert vals[IndicatorKind.AVG_BASKET] == 3.5
        assert vals[IndicatorKind.AVG_BASKET_WITHOUT_ITEM] == 1.0
        assert vals[IndicatorKind.AVG_NB_UNIQUE_ITEMS] == 1.5
        assert vals[IndicatorKind.AVG_NB_CLIENTS] == 1.5

    def test_counts(self):
        vals = compute_indicators(APPLE_WINDOW, APPLE_RECEIPTS)
        assert vals.n_days == 2
        assert vals.n_hit_receipts == 2
        assert vals.n_all_receipts == 3


class TestOracle:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_brute_force(self, seed):
        window, receipts = random_fixture(seed, max_receipts=120)
        try:
            expected = oracle(window, receipts)
        except NoHitReceipts:
            with pytest.raises(NoHitReceipts):
                compute_indicators(window, receipts)
            return
        vals = compute_indicators(window, receipts)
        for kind in IndicatorKind:
            assert vals[kind] == expected[kind], kind


class TestProperties:
    def test_no_hit_receipts_raises(self):
        window = APPLE_WINDOW
        receipts = [Receipt("R1", "S1", Date(2017, 6, 5), (ReceiptLine("milk", 1.0, 2.0),))]
        with pytest.raises(NoHitReceipts):
            compute_indicators(window, receipts)

    def test_receipts_outside_window_ignored(self):
        extra = [
            Receipt("X1", "S1", Date(2017, 6, 4), (ReceiptLine("apple", 9.0, 9.0),)),
            Receipt("X2", "S2", Date(2017, 6, 5), (ReceiptLine("apple", 9.0, 9.0),)),
        ]
        a = compute_indicators(APPLE_WINDOW, APPLE_RECEIPTS)
        b = compute_indicators(APPLE_WINDOW, APPLE_RECEIPTS + extra)
        assert a.values == b.values

    def test_quantity_scaling_scales_avg_amount_only(self):
        scaled = [
            Receipt(r.receipt_id, r.store_id, r.date,
                    tuple(ReceiptLine(l.product_id, 3.0 * l.quantity, l.line_value)
                          for l in r.lines))
            for r in APPLE_RECEIPTS
        ]
        a = compute_indicators(APPLE_WINDOW, APPLE_RECEIPTS)
        b = compute_indicators(APPLE_WINDOW, scaled)
        assert b[IndicatorKind.AVG_AMOUNT] == pytest.approx(3.0 * a[IndicatorKind.AVG_AMOUNT])
        for kind in IndicatorKind:
            if kind != IndicatorKind.AVG_AMOUNT:
                assert b[kind] == a[kind]

    def test_hit_receipts_subset_of_all(self):
        for seed in range(5):
            window, receipts = random_fixture(seed, max_receipts=60)
            try:
                vals = compute_indicators(window, receipts)
            except NoHitReceipts:
                continue
            assert vals.n_hit_receipts <= vals.n_all_receipts
            assert vals[IndicatorKind.AVG_NB_RECEIPTS] <= vals[IndicatorKind.AVG_NB_CLIENTS]
            assert vals[IndicatorKind.AVG_BASKET_WITHOUT_ITEM] <= vals[IndicatorKind.AVG_BASKET]
            assert vals[IndicatorKind.AVG_NB_UNIQUE_ITEMS] >= 1.0
