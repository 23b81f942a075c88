"""Six promotion-efficiency indicators computed from raw receipts.

All values describe one promotion window. With D the window duration in
days, H the receipts containing the promoted product and A all receipts of
that store inside the window:

    avg_amount              = total quantity of the product over H / D
    avg_nb_receipts         = |H| / D
    avg_basket              = mean total basket value over H
    avg_basket_without_item = mean (basket value - product lines) over H
    avg_nb_unique_items     = mean count of distinct products over H
    avg_nb_clients          = |A| / D
"""

from __future__ import annotations

from dataclasses import dataclass

from .domain import IndicatorKind, PromotionWindow, Receipt


class NoHitReceipts(Exception):
    """No receipt in the window contains the product: the four basket means
    are undefined and the window must be excluded from datasets."""

    def __init__(self, window: PromotionWindow):
        super().__init__(
            f"no receipts with {window.product_id} in {window.store_id} "
            f"{window.start_date}..{window.end_date}"
        )
        self.window = window


@dataclass(frozen=True)
class IndicatorValues:
    values: dict[IndicatorKind, float]
    n_days: int
    n_hit_receipts: int
    n_all_receipts: int

    def __getitem__(self, kind: IndicatorKind) -> float:
        return self.values[kind]


def compute_indicators(window: PromotionWindow, receipts: list[Receipt]) -> IndicatorValues:
    """Compute all six indicators for ``window`` from receipt-level data.

    ``receipts`` may be pre-filtered to the window's store and date span;
    anything outside is ignored. Raises :class:`NoHitReceipts` when the
    promoted product never appears.
    """
    d = window.duration_days
    in_window = [
        r for r in receipts
        if r.store_id == window.store_id
        and window.start_date <= r.date <= window.end_date
    ]
    hits = [r for r in in_window if any(l.product_id == window.product_id for l in r.lines)]
    if not hits:
        raise NoHitReceipts(window)

    total_qty = 0.0
    basket_sum = 0.0
    basket_wo_sum = 0.0
    unique_sum = 0
    for r in hits:
        for line in r.lines:
            if line.product_id == window.product_id:
                total_qty += line.quantity
        basket_sum += r.total_value
        basket_wo_sum += sum(
            l.line_value for l in r.lines if l.product_id != window.product_id
        )
        unique_sum += len({l.product_id for l in r.lines})

    h = len(hits)
    values = {
        IndicatorKind.AVG_AMOUNT: total_qty / d,
        IndicatorKind.AVG_NB_RECEIPTS: h / d,
        IndicatorKind.AVG_BASKET: basket_sum / h,
        IndicatorKind.AVG_BASKET_WITHOUT_ITEM: basket_wo_sum / h,
        IndicatorKind.AVG_NB_UNIQUE_ITEMS: unique_sum / h,
        IndicatorKind.AVG_NB_CLIENTS: len(in_window) / d,
    }
    return IndicatorValues(values, d, h, len(in_window))
