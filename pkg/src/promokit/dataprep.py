"""Feature engineering, matching no-promotion periods, per-(product, store)
z-score standardization and chronological dataset assembly.

A dataset row is one promotion window (or one matched no-promotion period,
recognizable by price_change == 0) with a fixed, ordered feature vector:
price attributes, calendar attributes of the first promotion day, the four
channel flags plus their OR/AND (subsets of size 2-4) and XOR (pairs)
combinations, all store-surroundings attributes, and three counts of
promotions concurrently active in the store.
"""

from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta
from itertools import combinations

import numpy as np

from .domain import (
    CHANNEL_NAMES,
    Channels,
    IndicatorKind,
    ProductRef,
    PromotionWindow,
    Receipt,
    StoreProfile,
)
from .indicators import NoHitReceipts, compute_indicators


class DataprepError(Exception):
    pass


class UnknownGroupNoFallback(DataprepError):
    """Neither (product, store) stats nor a group-level fallback exist."""


class EmptyGroup(DataprepError):
    def __init__(self, group: str, why: str):
        super().__init__(f"group {group!r}: {why}")
        self.group = group


# channel combinations: OR and AND over subsets of 2..4 channels,
# XOR over pairs only
_COMBOS_234 = [c for size in (2, 3, 4) for c in combinations(CHANNEL_NAMES, size)]
_PAIRS = list(combinations(CHANNEL_NAMES, 2))

CONCURRENCY_FEATURES = (
    "n_promos_in_store",
    "n_promos_tv_radio_internet",
    "n_promos_any_channel",
)


def feature_names(store_attributes: list[str]) -> list[str]:
    """The fixed feature order for a dataset whose stores carry
    ``store_attributes`` (in their profile order)."""
    names = [
        "promo_price",
        "price_change",
        "duration_days",
        "start_weekday",
        "year",
        "month",
        "day_of_month",
        "week_of_year",
        "day_of_year",
        "season",
        *CHANNEL_NAMES,
    ]
    names += [f"or_{'_'.join(c)}" for c in _COMBOS_234]
    names += [f"and_{'_'.join(c)}" for c in _COMBOS_234]
    names += [f"xor_{'_'.join(c)}" for c in _PAIRS]
    names += list(store_attributes)
    names += list(CONCURRENCY_FEATURES)
    return names


def _season(month: int) -> int:
    # Dec-Feb=1 (winter), Mar-May=2, Jun-Aug=3, Sep-Nov=4
    if month in (12, 1, 2):
        return 1
    if month <= 5:
        return 2
    if month <= 8:
        return 3
    return 4


def concurrency_counts(
    window: PromotionWindow, all_promotions: list[PromotionWindow]
) -> tuple[int, int, int]:
    """Promotions active in the window's store overlapping the window:
    (all, advertised on tv/radio/internet, advertised on any channel).

    The window itself counts once in every count when it is a real
    promotion; matched no-promotion windows count other promotions only.
    """
    self_count = 1 if window.is_promotion else 0
    n_all = n_tri = n_any = self_count
    for p in all_promotions:
        if not p.is_promotion or p.key == window.key or not p.overlaps(window):
            continue
        n_all += 1
        if p.channels.any_main:
            n_tri += 1
        if p.channels.any:
            n_any += 1
    return n_all, n_tri, n_any


def build_features(
    window: PromotionWindow,
    store: StoreProfile,
    all_promotions: list[PromotionWindow],
    concurrency: tuple[int, int, int] | None = None,
) -> dict[str, float]:
    """The engineered feature mapping for one window, in fixed order.

    ``concurrency`` may inject precomputed concurrency counts (used by the
    indexed bulk path); when absent they are derived from
    ``all_promotions``.
    """
    if store.store_id != window.store_id:
        raise DataprepError(
            f"store {store.store_id} does not match window store {window.store_id}"
        )
    d = window.start_date
    flags = dict(zip(CHANNEL_NAMES, window.channels.as_tuple()))
    out: dict[str, float] = {
        "promo_price": float(window.promo_price),
        "price_change": float(window.price_change),
        "duration_days": float(window.duration_days),
        "start_weekday": float(d.isoweekday()),
        "year": float(d.year),
        "month": float(d.month),
        "day_of_month": float(d.day),
        "week_of_year": float(d.isocalendar().week),
        "day_of_year": float(d.timetuple().tm_yday),
        "season": float(_season(d.month)),
    }
    for name in CHANNEL_NAMES:
        out[name] = float(flags[name])
    for combo in _COMBOS_234:
        out[f"or_{'_'.join(combo)}"] = float(any(flags[c] for c in combo))
    for combo in _COMBOS_234:
        out[f"and_{'_'.join(combo)}"] = float(all(flags[c] for c in combo))
    for a, b in _PAIRS:
        out[f"xor_{a}_{b}"] = float(flags[a] != flags[b])
    for name, value in store.attributes.items():
        out[name] = float(value)
    if concurrency is None:
        concurrency = concurrency_counts(window, all_promotions)
    for name, value in zip(CONCURRENCY_FEATURES, concurrency):
        out[name] = float(value)
    return out


def find_matching_period(
    window: PromotionWindow,
    all_promotions: list[PromotionWindow],
    regular_price: float | None = None,
) -> PromotionWindow | None:
    """A same-product, same-store, same-duration span starting k weeks
    (k in 1..4, smallest wins) before the promotion, on which the product
    is not in promotion on any day. ``None`` when all four candidates are
    blocked.

    The returned synthetic window has price_change 0, no channels and
    ``regular_price`` (fallback: the promotion price undone by its
    price_change).
    """
    if not window.is_promotion:
        raise DataprepError("matching periods are sought for real promotions only")
    if regular_price is None:
        regular_price = window.promo_price / (1.0 - window.price_change)
    relevant = [
        p
        for p in all_promotions
        if p.is_promotion
        and p.store_id == window.store_id
        and p.product_id == window.product_id
    ]
    for k in (1, 2, 3, 4):
        start = window.start_date - timedelta(days=7 * k)
        end = start + timedelta(days=window.duration_days - 1)
        blocked = any(
            p.start_date <= end and start <= p.end_date for p in relevant
        )
        if not blocked:
            return PromotionWindow(
                store_id=window.store_id,
                product_id=window.product_id,
                start_date=start,
                end_date=end,
                promo_price=regular_price,
                price_change=0.0,
                channels=Channels(),
            )
    return None


# ---------------------------------------------------------------------------
# Standardization


@dataclass
class StandardizerStats:
    """Per-(product, store) mean/sd with a per-group fallback.

    Pair stats apply only when computed from >= 2 values with sd > 0;
    otherwise the product-group fallback is used.
    """

    pairs: dict[tuple[str, str], tuple[float, float, int]] = field(default_factory=dict)
    groups: dict[str, tuple[float, float]] = field(default_factory=dict)
    pair_group: dict[tuple[str, str], str] = field(default_factory=dict)

    def resolve(self, product_id: str, store_id: str, group: str) -> tuple[float, float]:
        stat = self.pairs.get((product_id, store_id))
        if stat is not None and stat[2] >= 2 and stat[1] > 0:
            return stat[0], stat[1]
        if group in self.groups:
            return self.groups[group]
        raise UnknownGroupNoFallback(
            f"no stats for ({product_id}, {store_id}) and no fallback for group {group!r}"
        )


def _mean_sd(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)  # sample sd
    return mean, math.sqrt(var)


def fit_standardizer(records) -> StandardizerStats:
    """Fit from ``(product_id, store_id, group, value)`` training records."""
    per_pair: dict[tuple[str, str], list[float]] = defaultdict(list)
    per_group: dict[str, list[float]] = defaultdict(list)
    pair_group: dict[tuple[str, str], str] = {}
    for product_id, store_id, group, value in records:
        per_pair[(product_id, store_id)].append(float(value))
        per_group[group].append(float(value))
        pair_group[(product_id, store_id)] = group
    stats = StandardizerStats(pair_group=pair_group)
    for key, values in per_pair.items():
        mean, sd = _mean_sd(values)
        stats.pairs[key] = (mean, sd, len(values))
    for group, values in per_group.items():
        stats.groups[group] = _mean_sd(values)
    return stats


def standardize(
    value: float, product_id: str, store_id: str, group: str, stats: StandardizerStats
) -> float:
    mean, sd = stats.resolve(product_id, store_id, group)
    if sd == 0.0:
        return 0.0
    return (value - mean) / sd


def destandardize(
    z: float, product_id: str, store_id: str, group: str, stats: StandardizerStats
) -> float:
    mean, sd = stats.resolve(product_id, store_id, group)
    return z * sd + mean


def standardizer_to_csv(stats: StandardizerStats, path) -> None:
    """Pair rows as (product_id, store_id, mean, sd, n); group fallbacks are
    encoded with the group name in product_id and store_id ``*``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["product_id", "store_id", "mean", "sd", "n"])
        for (product_id, store_id), (mean, sd, n) in sorted(stats.pairs.items()):
            w.writerow([product_id, store_id, repr(mean), repr(sd), n])
        for group, (mean, sd) in sorted(stats.groups.items()):
            w.writerow([group, "*", repr(mean), repr(sd), 0])


def standardizer_from_csv(path, pair_groups: dict[tuple[str, str], str] | None = None) -> StandardizerStats:
    stats = StandardizerStats(pair_group=pair_groups or {})
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        for row in rd:
            if row["store_id"] == "*":
                stats.groups[row["product_id"]] = (float(row["mean"]), float(row["sd"]))
            else:
                stats.pairs[(row["product_id"], row["store_id"])] = (
                    float(row["mean"]), float(row["sd"]), int(row["n"]),
                )
    return stats


# ---------------------------------------------------------------------------
# Dataset assembly


@dataclass
class DatasetConfig:
    training_years: tuple[int, ...]
    test_year: int
    validation_fraction: float = 0.20

    def __post_init__(self):
        if not self.training_years:
            raise DataprepError("no training years")
        if max(self.training_years) >= self.test_year:
            raise DataprepError("training years must precede the test year")
        if not 0.0 < self.validation_fraction < 1.0:
            raise DataprepError("validation_fraction must be in (0,1)")


@dataclass
class FeatureRow:
    store_id: str
    product_id: str
    start_date: Date
    group: str
    features: dict[str, float]
    target: float
    is_promotion: bool

    @property
    def key(self) -> tuple[str, str, Date]:
        return (self.store_id, self.product_id, self.start_date)


@dataclass
class DatasetSplit:
    group: str
    kind: IndicatorKind
    feature_names: list[str]
    train: list[FeatureRow]
    validation: list[FeatureRow]
    test: list[FeatureRow]
    standardizer: StandardizerStats | None = None


class _StorePromoIndex:
    """Vectorized per-store concurrency counting over real promotions."""

    def __init__(self, promotions: list[PromotionWindow]):
        per_store: dict[str, list[PromotionWindow]] = defaultdict(list)
        for p in promotions:
            if p.is_promotion:
                per_store[p.store_id].append(p)
        self._data = {}
        for store_id, promos in per_store.items():
            starts = np.array([p.start_date.toordinal() for p in promos])
            ends = np.array([p.end_date.toordinal() for p in promos])
            tri = np.array([p.channels.any_main for p in promos])
            anyc = np.array([p.channels.any for p in promos])
            keys = {p.key for p in promos}
            self._data[store_id] = (starts, ends, tri, anyc, keys)

    def counts(self, window: PromotionWindow) -> tuple[int, int, int]:
        entry = self._data.get(window.store_id)
        self_count = 1 if window.is_promotion else 0
        if entry is None:
            return self_count, self_count, self_count
        starts, ends, tri, anyc, keys = entry
        overlap = (starts <= window.end_date.toordinal()) & (
            ends >= window.start_date.toordinal()
        )
        n_all = int(overlap.sum())
        n_tri = int((overlap & tri).sum())
        n_any = int((overlap & anyc).sum())
        if window.key in keys:  # remove the window's own indexed contribution
            n_all -= 1
            n_tri -= int(window.channels.any_main)
            n_any -= int(window.channels.any)
        return n_all + self_count, n_tri + self_count, n_any + self_count


class _ReceiptIndex:
    def __init__(self, receipts: list[Receipt]):
        self._by_store_date: dict[tuple[str, Date], list[Receipt]] = defaultdict(list)
        for r in receipts:
            self._by_store_date[(r.store_id, r.date)].append(r)

    def in_window(self, window: PromotionWindow) -> list[Receipt]:
        out: list[Receipt] = []
        for d in window.days():
            out.extend(self._by_store_date.get((window.store_id, d), ()))
        return out


def regular_prices(
    receipts: list[Receipt], promotions: list[PromotionWindow]
) -> dict[tuple[str, str], float]:
    """Modal unit price per (store, product) over days without a promotion
    of that product in that store."""
    promo_days: set[tuple[str, str, Date]] = set()
    for p in promotions:
        if p.is_promotion:
            for d in p.days():
                promo_days.add((p.store_id, p.product_id, d))
    counter: dict[tuple[str, str], Counter] = defaultdict(Counter)
    for r in receipts:
        for line in r.lines:
            if (r.store_id, line.product_id, r.date) in promo_days:
                continue
            price = round(line.line_value / line.quantity, 6)
            counter[(r.store_id, line.product_id)][price] += 1
    out = {}
    for key, prices in counter.items():
        # modal price; ties broken toward the lowest price
        best = max(prices.items(), key=lambda kv: (kv[1], -kv[0]))
        out[key] = best[0]
    return out


def to_matrix(rows: list[FeatureRow], names: list[str]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([[r.features[n] for n in names] for r in rows], dtype=float)
    y = np.array([r.target for r in rows], dtype=float)
    return X, y


def _chronological(rows: list[FeatureRow]) -> list[FeatureRow]:
    return sorted(rows, key=lambda r: (r.start_date, r.store_id, r.product_id))


def assemble_datasets(
    promotions: list[PromotionWindow],
    receipts: list[Receipt],
    stores: list[StoreProfile],
    catalog: list[ProductRef],
    config: DatasetConfig,
) -> dict[tuple[str, IndicatorKind], DatasetSplit]:
    """One DatasetSplit per (product group x indicator).

    Within a group all six splits share the identical feature matrix and
    differ only in the target column. Matched no-promotion periods enter
    the training part only; targets of the two standardized indicators are
    stored as z-scores with the fitted stats retained on the split.
    """
    group_of = {p.product_id: p.group for p in catalog}
    store_of = {s.store_id: s for s in stores}
    groups = sorted({p.group for p in catalog})
    rindex = _ReceiptIndex(receipts)
    pindex = _StorePromoIndex(promotions)
    reg_prices = regular_prices(receipts, promotions)

    if not stores:
        raise DataprepError("no stores")
    names = feature_names(list(stores[0].attributes))

    # (window, indicator values) per group, split by role
    train_wins: dict[str, list] = defaultdict(list)
    test_wins: dict[str, list] = defaultdict(list)
    for w in promotions:
        if not w.is_promotion:
            continue
        group = group_of.get(w.product_id)
        store = store_of.get(w.store_id)
        if group is None or store is None:
            raise DataprepError(f"promotion references unknown product/store: {w.key}")
        year = w.start_date.year
        in_train = year in config.training_years
        in_test = year == config.test_year
        if not (in_train or in_test):
            continue
        try:
            vals = compute_indicators(w, rindex.in_window(w))
        except NoHitReceipts:
            continue
        feats = build_features(w, store, promotions, concurrency=pindex.counts(w))
        if in_train:
            train_wins[group].append((w, feats, vals))
            matched = find_matching_period(
                w, promotions, regular_price=reg_prices.get((w.store_id, w.product_id))
            )
            if matched is not None:
                try:
                    mvals = compute_indicators(matched, rindex.in_window(matched))
                except NoHitReceipts:
                    mvals = None
                if mvals is not None:
                    mfeats = build_features(
                        matched, store, promotions, concurrency=pindex.counts(matched)
                    )
                    train_wins[group].append((matched, mfeats, mvals))
        else:
            test_wins[group].append((w, feats, vals))

    out: dict[tuple[str, IndicatorKind], DatasetSplit] = {}
    for group in groups:
        if not any(w.is_promotion for w, _, _ in train_wins.get(group, [])):
            raise EmptyGroup(group, "no usable training promotions")
        if not test_wins.get(group):
            raise EmptyGroup(group, "no usable test promotions")
        for kind in IndicatorKind:
            rows_train = [
                FeatureRow(w.store_id, w.product_id, w.start_date, group,
                           feats, vals[kind], w.is_promotion)
                for w, feats, vals in train_wins[group]
            ]
            rows_test = [
                FeatureRow(w.store_id, w.product_id, w.start_date, group,
                           feats, vals[kind], w.is_promotion)
                for w, feats, vals in test_wins[group]
            ]
            rows_train = _chronological(rows_train)
            rows_test = _chronological(rows_test)

            standardizer = None
            if kind.standardized:
                standardizer = fit_standardizer(
                    (r.product_id, r.store_id, r.group, r.target) for r in rows_train
                )
                for r in rows_train:
                    r.target = standardize(
                        r.target, r.product_id, r.store_id, r.group, standardizer
                    )

            n = len(rows_train)
            n_val = max(1, math.floor(config.validation_fraction * n)) if n >= 2 else 0
            split = DatasetSplit(
                group=group,
                kind=kind,
                feature_names=list(names),
                train=rows_train[: n - n_val],
                validation=rows_train[n - n_val:],
                test=rows_test,
                standardizer=standardizer,
            )
            out[(group, kind)] = split
    return out


def split_to_csv(split: DatasetSplit, path, part: str) -> None:
    rows = getattr(split, part)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["store_id", "product_id", "start_date", *split.feature_names,
                    "target", "is_promotion"])
        for r in rows:
            w.writerow([
                r.store_id, r.product_id, r.start_date.isoformat(),
                *(repr(r.features[n]) for n in split.feature_names),
                repr(float(r.target)), int(r.is_promotion),
            ])
