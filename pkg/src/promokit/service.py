"""JSON-over-HTTP forecasting service backing the planner UI.

Loads trained models from a directory and answers what-if forecast and
importance queries. The registry is read-mostly: a reload builds the whole
mapping aside and swaps it in atomically, bumping a monotone version.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import dataprep, gbt
from .domain import (
    CHANNEL_NAMES,
    Channels,
    IndicatorKind,
    InvariantViolation,
    PromotionWindow,
    StoreProfile,
    load_catalog,
    load_stores,
)


class PlannedPromotion(BaseModel):
    store_id: str
    product_id: str
    start_date: str
    end_date: str
    promo_price: float
    price_change: float
    tv: bool = False
    radio: bool = False
    internet: bool = False
    other: bool = False


class ForecastRequest(BaseModel):
    group: str
    store_id: str
    product_id: str | None = None
    promo_price: float
    price_change: float
    start_date: str
    duration_days: int
    tv: bool = False
    radio: bool = False
    internet: bool = False
    other: bool = False
    #: concurrently planned promotions; the request's own promotion always
    #: counts once in every concurrency feature
    planned_promotions: list[PlannedPromotion] = []


@dataclass
class _Entry:
    model: gbt.GbtModel
    standardizer: dataprep.StandardizerStats | None


@dataclass
class _Snapshot:
    version: int = 0
    entries: dict[tuple[str, str], _Entry] = field(default_factory=dict)
    stores: dict[str, StoreProfile] = field(default_factory=dict)
    groups: set[str] = field(default_factory=set)


class ModelRegistry:
    """Holds the loaded models; reload() swaps a fresh snapshot atomically."""

    def __init__(self, models_dir: Path, stores_path: Path, catalog_path: Path):
        self.models_dir = Path(models_dir)
        self.stores_path = Path(stores_path)
        self.catalog_path = Path(catalog_path)
        self._snapshot = _Snapshot()
        self._lock = threading.Lock()

    @property
    def snapshot(self) -> _Snapshot:
        return self._snapshot

    def reload(self) -> int:
        entries: dict[tuple[str, str], _Entry] = {}
        for path in sorted(self.models_dir.glob("*.model")):
            model = gbt.load_model(path)
            group = model.metadata.get("group")
            indicator = model.metadata.get("indicator")
            if not group or not indicator:
                stem = path.stem
                group, _, indicator = stem.partition("__")
            std_path = path.with_name(f"{group}__{indicator}.standardizer.csv")
            standardizer = (
                dataprep.standardizer_from_csv(std_path) if std_path.exists() else None
            )
            entries[(group, indicator)] = _Entry(model, standardizer)
        stores = {s.store_id: s for s in load_stores(self.stores_path)}
        groups = {p.group for p in load_catalog(self.catalog_path)}
        groups |= {g for g, _ in entries}
        with self._lock:
            snap = _Snapshot(
                version=self._snapshot.version + 1,
                entries=entries,
                stores=stores,
                groups=groups,
            )
            self._snapshot = snap
        return snap.version


def _validate(req: ForecastRequest) -> None:
    if not 1 <= req.duration_days <= 7:
        raise HTTPException(400, "duration_days must be in [1,7]")
    if not 0.0 < req.price_change < 1.0:
        raise HTTPException(400, "price_change must be in (0,1)")
    if not req.promo_price > 0:
        raise HTTPException(400, "promo_price must be > 0")
    try:
        Date.fromisoformat(req.start_date)
    except ValueError:
        raise HTTPException(400, f"bad start_date: {req.start_date!r}") from None


def _window(req: ForecastRequest) -> PromotionWindow:
    start = Date.fromisoformat(req.start_date)
    return PromotionWindow(
        store_id=req.store_id,
        product_id=req.product_id or "?",
        start_date=start,
        end_date=start + timedelta(days=req.duration_days - 1),
        promo_price=req.promo_price,
        price_change=req.price_change,
        channels=Channels(req.tv, req.radio, req.internet, req.other),
    )


def _planned_windows(req: ForecastRequest) -> list[PromotionWindow]:
    out = []
    for p in req.planned_promotions:
        try:
            out.append(PromotionWindow(
                store_id=p.store_id,
                product_id=p.product_id,
                start_date=Date.fromisoformat(p.start_date),
                end_date=Date.fromisoformat(p.end_date),
                promo_price=p.promo_price,
                price_change=p.price_change,
                channels=Channels(p.tv, p.radio, p.internet, p.other),
            ))
        except (ValueError, InvariantViolation) as exc:
            raise HTTPException(400, f"bad planned promotion: {exc}") from None
    return out


def create_app(registry: ModelRegistry) -> FastAPI:
    app = FastAPI(title="promokit")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def invalid_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": registry.snapshot.version}

    @app.get("/models")
    def models():
        snap = registry.snapshot
        return [
            {
                "group": group,
                "indicator": indicator,
                "version": snap.version,
                **{k: v for k, v in e.model.metadata.items()
                   if k not in ("group", "indicator")},
            }
            for (group, indicator), e in sorted(snap.entries.items())
        ]

    @app.post("/reload")
    def reload_models():
        return {"version": registry.reload()}

    @app.post("/forecast")
    def forecast(req: ForecastRequest):
        snap = registry.snapshot
        if not snap.entries:
            raise HTTPException(409, "no models loaded")
        _validate(req)
        if req.group not in snap.groups:
            raise HTTPException(404, f"unknown group: {req.group!r}")
        store = snap.stores.get(req.store_id)
        if store is None:
            raise HTTPException(404, f"unknown store: {req.store_id!r}")
        window = _window(req)
        concurrency = dataprep.concurrency_counts(window, _planned_windows(req))
        features = dataprep.build_features(window, store, [], concurrency=concurrency)
        values = {}
        for kind in IndicatorKind:
            entry = snap.entries.get((req.group, kind.value))
            if entry is None:
                raise HTTPException(409, f"models for group {req.group!r} not loaded")
            try:
                pred = gbt.predict_row(entry.model, features)
            except gbt.FeatureMismatch as exc:
                raise HTTPException(409, f"model/feature mismatch: {exc}") from None
            if entry.standardizer is not None:
                pred = dataprep.destandardize(
                    pred, req.product_id or "", req.store_id, req.group,
                    entry.standardizer,
                )
            values[kind.value] = pred
        return {
            "indicators": values,
            "model_version": snap.version,
            "request": req.model_dump(),
        }

    @app.get("/importance/{group}/{indicator}")
    def importance(group: str, indicator: str, top_k: int = 10):
        snap = registry.snapshot
        if not snap.entries:
            raise HTTPException(409, "no models loaded")
        try:
            kind = IndicatorKind(indicator)
        except ValueError:
            raise HTTPException(404, f"unknown indicator: {indicator!r}") from None
        entry = snap.entries.get((group, kind.value))
        if entry is None:
            raise HTTPException(404, f"no model for ({group!r}, {indicator!r})")
        try:
            ranked = gbt.importance(entry.model, top_k=top_k)
        except gbt.NoSplits:
            ranked = []
        return {
            "group": group,
            "indicator": kind.value,
            "features": [{"name": n, "value": v} for n, v in ranked],
        }

    return app
