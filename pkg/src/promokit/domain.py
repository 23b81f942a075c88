"""Core data model and CSV ingestion for receipts, promotions, stores and catalog.

All ingestion is strict: a bad row raises with its line number instead of
being silently dropped, so that count(out) == count(rows) - count(rejected)
holds trivially (we reject by raising; callers that want to skip rows catch
per-row via the *collect* helpers).
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta


class DomainError(Exception):
    """Base class for ingestion and invariant errors."""


class MalformedRow(DomainError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(DomainError):
    def __init__(self, ident: str):
        super().__init__(f"duplicate id: {ident}")
        self.ident = ident


class UnknownReference(DomainError):
    def __init__(self, ref: str):
        super().__init__(f"unknown reference: {ref}")
        self.ref = ref


class InvariantViolation(DomainError):
    pass


class SoldBy(str, enum.Enum):
    UNIT = "unit"
    WEIGHT = "weight"


class IndicatorKind(str, enum.Enum):
    """The six promotion-efficiency indicators."""

    AVG_AMOUNT = "avg_amount"
    AVG_NB_RECEIPTS = "avg_nb_receipts"
    AVG_BASKET = "avg_basket"
    AVG_BASKET_WITHOUT_ITEM = "avg_basket_without_item"
    AVG_NB_UNIQUE_ITEMS = "avg_nb_unique_items"
    AVG_NB_CLIENTS = "avg_nb_clients"

    @property
    def standardized(self) -> bool:
        return self in (IndicatorKind.AVG_AMOUNT, IndicatorKind.AVG_NB_RECEIPTS)


_LABELS = {
    IndicatorKind.AVG_AMOUNT: "AVG. AMOUNT",
    IndicatorKind.AVG_NB_RECEIPTS: "AVG. NB. RECEIPTS",
    IndicatorKind.AVG_BASKET: "AVG. BASKET",
    IndicatorKind.AVG_BASKET_WITHOUT_ITEM: "AVG. BASKET WITHOUT ITEM",
    IndicatorKind.AVG_NB_UNIQUE_ITEMS: "AVG. NB. UNIQUE ITEMS",
    IndicatorKind.AVG_NB_CLIENTS: "AVG. NB. CLIENTS",
}


def indicator_label(kind: IndicatorKind) -> str:
    return _LABELS[kind]


CHANNEL_NAMES = ("tv", "radio", "internet", "other")


@dataclass(frozen=True)
class Channels:
    """Advertisement channel flags of one promotion."""

    tv: bool = False
    radio: bool = False
    internet: bool = False
    other: bool = False

    def as_tuple(self) -> tuple[bool, bool, bool, bool]:
        return (self.tv, self.radio, self.internet, self.other)

    @property
    def any_main(self) -> bool:
        """Advertised on tv, radio or internet."""
        return self.tv or self.radio or self.internet

    @property
    def any(self) -> bool:
        return self.tv or self.radio or self.internet or self.other


NONE_CHANNELS = Channels()


@dataclass(frozen=True)
class ProductRef:
    product_id: str
    group: str
    sold_by: SoldBy

    def __post_init__(self):
        if not self.product_id:
            raise InvariantViolation("empty product_id")
        if not self.group:
            raise InvariantViolation("empty group")


@dataclass(frozen=True)
class ReceiptLine:
    product_id: str
    quantity: float
    line_value: float

    def __post_init__(self):
        if not self.quantity > 0:
            raise InvariantViolation(f"quantity must be > 0, got {self.quantity}")
        if self.line_value < 0:
            raise InvariantViolation(f"line_value must be >= 0, got {self.line_value}")


@dataclass(frozen=True)
class Receipt:
    receipt_id: str
    store_id: str
    date: Date
    lines: tuple[ReceiptLine, ...]

    def __post_init__(self):
        if not self.lines:
            raise InvariantViolation(f"receipt {self.receipt_id} has no lines")

    @property
    def total_value(self) -> float:
        return sum(l.line_value for l in self.lines)


@dataclass(frozen=True)
class PromotionWindow:
    """One promotion of one product in one store; the unit of a dataset record.

    ``price_change == 0`` marks a matched no-promotion period.
    """

    store_id: str
    product_id: str
    start_date: Date
    end_date: Date
    promo_price: float
    price_change: float
    channels: Channels = NONE_CHANNELS

    def __post_init__(self):
        if self.end_date < self.start_date:
            raise InvariantViolation("end_date before start_date")
        if self.duration_days > 7:
            raise InvariantViolation(
                f"promotion longer than 7 days ({self.duration_days})"
            )
        if not (0.0 <= self.price_change < 1.0):
            raise InvariantViolation(f"price_change out of [0,1): {self.price_change}")
        if not self.promo_price > 0:
            raise InvariantViolation(f"promo_price must be > 0: {self.promo_price}")

    @property
    def duration_days(self) -> int:
        return (self.end_date - self.start_date).days + 1

    @property
    def is_promotion(self) -> bool:
        return self.price_change > 0

    def days(self):
        d = self.start_date
        while d <= self.end_date:
            yield d
            d += timedelta(days=1)

    def overlaps(self, other: "PromotionWindow") -> bool:
        return (
            self.store_id == other.store_id
            and self.start_date <= other.end_date
            and other.start_date <= self.end_date
        )

    @property
    def key(self) -> tuple[str, str, Date]:
        return (self.store_id, self.product_id, self.start_date)


#: surroundings attributes every store profile must carry, in canonical order
STORE_ATTRIBUTES = (
    "inhabitants_1km",
    "inhabitants_per_km2",
    "inhabitants_5min_drive",
    "inhabitants_10min_drive",
    "inhabitants_500m",
    "unemployment_rate",
    "cars_per_1000",
    "avg_monthly_salary",
    "tourism_ratio",
    "n_competitors",
    "competitor_distance",
    "purchasing_rate",
)


@dataclass(frozen=True)
class StoreProfile:
    store_id: str
    attributes: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name, value in self.attributes.items():
            v = float(value)
            if v != v or v in (float("inf"), float("-inf")):
                raise InvariantViolation(f"non-finite store attribute {name}")
            if v < 0:
                raise InvariantViolation(f"negative store attribute {name}={v}")


# ---------------------------------------------------------------------------
# CSV ingestion / export


def _parse_float(raw: str, line_no: int, col: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise MalformedRow(line_no, f"bad number in {col}: {raw!r}") from None


def _parse_date(raw: str, line_no: int, col: str) -> Date:
    try:
        return Date.fromisoformat(raw)
    except ValueError:
        raise MalformedRow(line_no, f"bad date in {col}: {raw!r}") from None


def _parse_bool(raw: str, line_no: int, col: str) -> bool:
    if raw in ("0", "1"):
        return raw == "1"
    raise MalformedRow(line_no, f"bad boolean in {col}: {raw!r}")


def _reader(path, expected: list[str]):
    """Yield (line_no, row dict); validates the header up front."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        try:
            header = next(rd)
        except StopIteration:
            raise MalformedRow(1, "empty file") from None
        if expected and header != expected:
            raise MalformedRow(1, f"bad header {header}, expected {expected}")
        for line_no, row in enumerate(rd, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(line_no, f"expected {len(header)} fields, got {len(row)}")
            yield line_no, dict(zip(header, row))


CATALOG_HEADER = ["product_id", "group", "sold_by"]
RECEIPTS_HEADER = ["receipt_id", "store_id", "date", "product_id", "quantity", "line_value"]
PROMOTIONS_HEADER = [
    "store_id", "product_id", "start_date", "end_date",
    "promo_price", "price_change", "tv", "radio", "internet", "other",
]


def load_catalog(path) -> list[ProductRef]:
    out: list[ProductRef] = []
    seen: set[str] = set()
    for line_no, row in _reader(path, CATALOG_HEADER):
        if not row["group"]:
            raise MalformedRow(line_no, "empty group")
        if not row["product_id"]:
            raise MalformedRow(line_no, "empty product_id")
        if row["product_id"] in seen:
            raise DuplicateId(row["product_id"])
        try:
            sold_by = SoldBy(row["sold_by"])
        except ValueError:
            raise MalformedRow(line_no, f"bad sold_by: {row['sold_by']!r}") from None
        seen.add(row["product_id"])
        out.append(ProductRef(row["product_id"], row["group"], sold_by))
    return out


def load_receipts(path, catalog: list[ProductRef] | None = None) -> list[Receipt]:
    known = {p.product_id for p in catalog} if catalog is not None else None
    grouped: dict[str, dict] = {}
    order: list[str] = []
    for line_no, row in _reader(path, RECEIPTS_HEADER):
        rid = row["receipt_id"]
        if known is not None and row["product_id"] not in known:
            raise UnknownReference(row["product_id"])
        line = ReceiptLine(
            row["product_id"],
            _parse_float(row["quantity"], line_no, "quantity"),
            _parse_float(row["line_value"], line_no, "line_value"),
        )
        d = _parse_date(row["date"], line_no, "date")
        if rid not in grouped:
            grouped[rid] = {"store_id": row["store_id"], "date": d, "lines": []}
            order.append(rid)
        else:
            g = grouped[rid]
            if g["store_id"] != row["store_id"] or g["date"] != d:
                raise InvariantViolation(
                    f"receipt {rid}: inconsistent store/date across lines"
                )
        grouped[rid]["lines"].append(line)
    return [
        Receipt(rid, grouped[rid]["store_id"], grouped[rid]["date"], tuple(grouped[rid]["lines"]))
        for rid in order
    ]


def load_promotions(
    path,
    catalog: list[ProductRef] | None = None,
    stores: list[StoreProfile] | None = None,
) -> list[PromotionWindow]:
    known_products = {p.product_id for p in catalog} if catalog is not None else None
    known_stores = {s.store_id for s in stores} if stores is not None else None
    out = []
    for line_no, row in _reader(path, PROMOTIONS_HEADER):
        if known_products is not None and row["product_id"] not in known_products:
            raise UnknownReference(row["product_id"])
        if known_stores is not None and row["store_id"] not in known_stores:
            raise UnknownReference(row["store_id"])
        channels = Channels(*(_parse_bool(row[c], line_no, c) for c in CHANNEL_NAMES))
        try:
            win = PromotionWindow(
                store_id=row["store_id"],
                product_id=row["product_id"],
                start_date=_parse_date(row["start_date"], line_no, "start_date"),
                end_date=_parse_date(row["end_date"], line_no, "end_date"),
                promo_price=_parse_float(row["promo_price"], line_no, "promo_price"),
                price_change=_parse_float(row["price_change"], line_no, "price_change"),
                channels=channels,
            )
        except InvariantViolation as exc:
            raise InvariantViolation(f"line {line_no}: {exc}") from None
        out.append(win)
    return out


def load_stores(path) -> list[StoreProfile]:
    out = []
    seen: set[str] = set()
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        try:
            header = next(rd)
        except StopIteration:
            raise MalformedRow(1, "empty file") from None
        if not header or header[0] != "store_id":
            raise MalformedRow(1, "first column must be store_id")
        attrs = header[1:]
        missing = [a for a in STORE_ATTRIBUTES if a not in attrs]
        if missing:
            raise MalformedRow(1, f"missing store attributes: {missing}")
        for line_no, row in enumerate(rd, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(line_no, f"expected {len(header)} fields, got {len(row)}")
            sid = row[0]
            if sid in seen:
                raise DuplicateId(sid)
            seen.add(sid)
            values = {
                name: _parse_float(raw, line_no, name)
                for name, raw in zip(attrs, row[1:])
            }
            out.append(StoreProfile(sid, values))
    return out


def _fmt(x: float) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def save_catalog(path, catalog: list[ProductRef]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CATALOG_HEADER)
        for p in catalog:
            w.writerow([p.product_id, p.group, p.sold_by.value])


def save_receipts(path, receipts: list[Receipt]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECEIPTS_HEADER)
        for r in receipts:
            for line in r.lines:
                w.writerow([
                    r.receipt_id, r.store_id, r.date.isoformat(),
                    line.product_id, _fmt(line.quantity), _fmt(line.line_value),
                ])


def save_promotions(path, promotions: list[PromotionWindow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROMOTIONS_HEADER)
        for p in promotions:
            w.writerow([
                p.store_id, p.product_id,
                p.start_date.isoformat(), p.end_date.isoformat(),
                _fmt(p.promo_price), _fmt(p.price_change),
                *(int(f) for f in p.channels.as_tuple()),
            ])


def save_stores(path, stores: list[StoreProfile]) -> None:
    if not stores:
        raise InvariantViolation("no stores to save")
    attrs = list(stores[0].attributes)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["store_id", *attrs])
        for s in stores:
            w.writerow([s.store_id, *(_fmt(s.attributes[a]) for a in attrs)])
