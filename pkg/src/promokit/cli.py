"""Command-line entry point: synth, prepare, train, optimize, forecast,
importance and serve subcommands.

All randomness flows from one top-level seed; each stage derives its own
sub-seed as sha256("<seed>:<stage>[:qualifiers]"), so stages re-run
independently yet reproducibly and re-running any command with unchanged
inputs yields byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataprep, domain, gbt, hpo, metrics, synthdata
from .domain import IndicatorKind, indicator_label


class ConfigError(Exception):
    pass


def parse_kv_config(path) -> dict[str, str]:
    """Flat ``key = value`` text config; '#' starts a comment."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def sub_seed(seed: int, *stage: str) -> int:
    digest = hashlib.sha256(f"{seed}:{':'.join(stage)}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**31)


@dataclass
class RunConfig:
    out_dir: Path
    seed: int = 0
    training_years: tuple[int, ...] = (2016, 2017)
    test_year: int = 2018
    validation_fraction: float = 0.20
    budget: int = 720
    catalog_path: Path | None = None
    receipts_path: Path | None = None
    promotions_path: Path | None = None
    stores_path: Path | None = None
    raw: dict[str, str] | None = None

    def data_path(self, name: str) -> Path:
        explicit = getattr(self, f"{name}_path")
        return explicit if explicit is not None else self.out_dir / "data" / f"{name}.csv"


def _run_config(args) -> RunConfig:
    raw = parse_kv_config(args.config) if args.config else {}
    try:
        cfg = RunConfig(
            out_dir=Path(args.out if args.out else raw.get("out", "out")),
            seed=args.seed if args.seed is not None else int(raw.get("seed", "0")),
            training_years=tuple(
                int(y) for y in raw.get("training_years", "2016,2017").split(",")
            ),
            test_year=int(raw.get("test_year", "2018")),
            validation_fraction=float(raw.get("validation_fraction", "0.2")),
            budget=args.budget if getattr(args, "budget", None) is not None
            else int(raw.get("budget", "720")),
            catalog_path=Path(raw["catalog"]) if "catalog" in raw else None,
            receipts_path=Path(raw["receipts"]) if "receipts" in raw else None,
            promotions_path=Path(raw["promotions"]) if "promotions" in raw else None,
            stores_path=Path(raw["stores"]) if "stores" in raw else None,
            raw=raw,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if max(cfg.training_years) >= cfg.test_year:
        raise ConfigError("training years must precede the test year")
    if not 0.0 < cfg.validation_fraction < 1.0:
        raise ConfigError("validation_fraction must be in (0,1)")
    return cfg


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _gen_config(cfg: RunConfig) -> synthdata.GenConfig:
    raw = cfg.raw or {}
    gen = synthdata.GenConfig(seed=sub_seed(cfg.seed, "synth"))
    for name in (
        "n_stores", "n_products_per_group", "start_year", "n_years",
        "receipts_per_day",
    ):
        if f"synth_{name}" in raw:
            setattr(gen, name, int(raw[f"synth_{name}"]))
    for name in (
        "elasticity", "channel_lift", "seasonal_amplitude", "noise_level",
        "channel_prob",
    ):
        if f"synth_{name}" in raw:
            setattr(gen, name, float(raw[f"synth_{name}"]))
    if "synth_groups" in raw:
        gen.groups = tuple(g.strip() for g in raw["synth_groups"].split(","))
    return gen


def cmd_synth(cfg: RunConfig) -> None:
    result = synthdata.generate(_gen_config(cfg))
    data_dir = cfg.out_dir / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    domain.save_catalog(data_dir / "catalog.csv", result.catalog)
    domain.save_stores(data_dir / "stores.csv", result.stores)
    domain.save_promotions(data_dir / "promotions.csv", result.promotions)
    domain.save_receipts(data_dir / "receipts.csv", result.receipts)
    print(
        f"wrote {len(result.receipts)} receipts, {len(result.promotions)} promotions, "
        f"{len(result.stores)} stores, {len(result.catalog)} products to {data_dir}"
    )


def _load_inputs(cfg: RunConfig):
    catalog = domain.load_catalog(cfg.data_path("catalog"))
    stores = domain.load_stores(cfg.data_path("stores"))
    promotions = domain.load_promotions(cfg.data_path("promotions"), catalog, stores)
    receipts = domain.load_receipts(cfg.data_path("receipts"), catalog)
    return catalog, stores, promotions, receipts


def _assemble(cfg: RunConfig):
    catalog, stores, promotions, receipts = _load_inputs(cfg)
    ds_config = dataprep.DatasetConfig(
        training_years=cfg.training_years,
        test_year=cfg.test_year,
        validation_fraction=cfg.validation_fraction,
    )
    return dataprep.assemble_datasets(promotions, receipts, stores, catalog, ds_config)


def cmd_prepare(cfg: RunConfig) -> None:
    splits = _assemble(cfg)
    out = cfg.out_dir / "datasets"
    out.mkdir(parents=True, exist_ok=True)
    for (group, kind), split in sorted(splits.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        stem = f"{group}__{kind.value}"
        for part in ("train", "validation", "test"):
            dataprep.split_to_csv(split, out / f"{stem}__{part}.csv", part)
        if split.standardizer is not None:
            dataprep.standardizer_to_csv(split.standardizer, out / f"{stem}.standardizer.csv")
    print(f"wrote {len(splits)} dataset splits to {out}")


def _train_full(split, hp, seed):
    rows = split.train + split.validation
    X, y = dataprep.to_matrix(rows, split.feature_names)
    return gbt.train(X, y, split.feature_names, hp, seed)


def _test_report(split, model):
    """Test-set error measures, destandardized where applicable."""
    X, y = dataprep.to_matrix(split.test, split.feature_names)
    pred = gbt.predict(model, X)
    if split.standardizer is not None:
        pred = np.array([
            dataprep.destandardize(p, r.product_id, r.store_id, r.group, split.standardizer)
            for p, r in zip(pred, split.test)
        ])
    return metrics.evaluate(y, pred)


def _report_row(group, kind, report) -> list[str]:
    mape = "NA" if report.mape is None else f"{report.mape:.6f}"
    return [group, indicator_label(kind), f"{report.mae:.6f}", f"{report.rmse:.6f}",
            mape, f"{report.wmape:.6f}"]


def _write_report(path: Path, rows: list[list[str]], header: list[str]) -> None:
    lines = [",".join(header)]
    lines += [",".join(r) for r in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def _save_model(path: Path, model) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(path, gbt.dump_model(model))


def _model_metadata(cfg: RunConfig, group: str, kind: IndicatorKind) -> dict[str, str]:
    return {
        "group": group,
        "indicator": kind.value,
        "training_years": "-".join(str(y) for y in cfg.training_years),
        "test_year": str(cfg.test_year),
    }


def cmd_train(cfg: RunConfig) -> None:
    splits = _assemble(cfg)
    rows = []
    for (group, kind), split in sorted(splits.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        _, y_train = dataprep.to_matrix(split.train + split.validation, split.feature_names)
        hp = hpo.default_params(y_train)
        model = _train_full(split, hp, sub_seed(cfg.seed, "train", group, kind.value))
        model.metadata = _model_metadata(cfg, group, kind)
        stem = f"{group}__{kind.value}"
        _save_model(cfg.out_dir / "models" / "default" / f"{stem}.model", model)
        if split.standardizer is not None:
            path = cfg.out_dir / "models" / "default" / f"{stem}.standardizer.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            dataprep.standardizer_to_csv(split.standardizer, path)
        rows.append(_report_row(group, kind, _test_report(split, model)))
    _write_report(cfg.out_dir / "report_default.csv", rows,
                  ["category", "indicator", "mae", "rmse", "mape", "wmape"])
    print(f"trained {len(rows)} default models; report at {cfg.out_dir / 'report_default.csv'}")


def cmd_optimize(cfg: RunConfig) -> None:
    splits = _assemble(cfg)
    rows = []
    diff_rows = []
    hpo_dir = cfg.out_dir / "hpo"
    hpo_dir.mkdir(parents=True, exist_ok=True)
    for (group, kind), split in sorted(splits.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        problem = hpo.problem_from_split(split)
        result = hpo.optimize(
            problem,
            seed=sub_seed(cfg.seed, "hpo", group, kind.value),
            config=hpo.HpoConfig(permutation_budget=cfg.budget),
        )
        model = _train_full(split, result.best_params,
                            sub_seed(cfg.seed, "train", group, kind.value))
        model.metadata = _model_metadata(cfg, group, kind)
        stem = f"{group}__{kind.value}"
        _save_model(cfg.out_dir / "models" / "optimized" / f"{stem}.model", model)
        if split.standardizer is not None:
            path = cfg.out_dir / "models" / "optimized" / f"{stem}.standardizer.csv"
            dataprep.standardizer_to_csv(split.standardizer, path)
        rows.append(_report_row(group, kind, _test_report(split, model)))
        diff = metrics.rmse_improvement(result.default_rmse, result.best_validation_rmse)
        diff_rows.append([
            group, indicator_label(kind),
            f"{result.default_rmse:.6f}", f"{result.best_validation_rmse:.6f}",
            f"{diff:.6f}",
        ])
        _write_hpo_report(hpo_dir, stem, result)
    _write_report(cfg.out_dir / "report_optimized.csv", rows,
                  ["category", "indicator", "mae", "rmse", "mape", "wmape"])
    _write_report(cfg.out_dir / "report_rmse_diff.csv", diff_rows,
                  ["category", "indicator", "rmse_default", "rmse_optimized", "rmse_diff"])
    print(f"optimized {len(rows)} models; reports at {cfg.out_dir}")


def _write_hpo_report(hpo_dir: Path, stem: str, result) -> None:
    lines = [
        f"winning_permutation {' '.join(result.best_permutation)}",
        f"best_validation_rmse {result.best_validation_rmse!r}",
        f"default_rmse {result.default_rmse!r}",
        f"refined_rmse {result.refined_rmse!r}",
        "best_params " + " ".join(
            f"{k}={v!r}" for k, v in result.best_params.as_dict().items()
        ),
        f"evaluations_total {result.evaluations_total}",
        f"trainings_total {result.trainings_total}",
        f"cache_hits {result.cache_hits}",
        "rmse_trajectory "
        + " ".join(repr(r) for _, _, r in result.pass_results),
    ]
    _atomic_write(hpo_dir / f"{stem}.txt", "\n".join(lines) + "\n")
    log_lines = [",".join([*gbt.PARAM_NAMES, "rmse"])]
    for hp, rmse in result.log:
        log_lines.append(",".join([
            str(hp.nrounds), repr(hp.base_score), repr(hp.eta), repr(hp.gamma),
            str(hp.max_depth), repr(hp.subsample), repr(rmse),
        ]))
    _atomic_write(hpo_dir / f"{stem}.log.csv", "\n".join(log_lines) + "\n")


def _read_feature_row(path: Path) -> dict[str, float]:
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        return {k: float(v) for k, v in data.items()}
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        row = next(iter(rd), None)
        if row is None:
            raise ConfigError(f"no feature row in {path}")
        return {k: float(v) for k, v in row.items()}


def cmd_forecast(args) -> None:
    model = gbt.load_model(args.model)
    features = _read_feature_row(Path(args.features))
    value = gbt.predict_row(model, features)
    if args.standardizer:
        stats = dataprep.standardizer_from_csv(args.standardizer)
        value = dataprep.destandardize(
            value, args.product or "", args.store or "", args.group or "", stats
        )
    print(repr(value))


def cmd_importance(args) -> None:
    model = gbt.load_model(args.model)
    for name, value in gbt.importance(model, top_k=args.top_k):
        print(f"{name},{value!r}")


def cmd_serve(args) -> None:
    import uvicorn

    from .service import ModelRegistry, create_app

    registry = ModelRegistry(
        models_dir=Path(args.models_dir),
        stores_path=Path(args.stores),
        catalog_path=Path(args.catalog),
    )
    registry.reload()
    uvicorn.run(create_app(registry), host=args.host, port=args.port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promokit",
        description="Forecasting promotion-efficiency indicators for grocery retail",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")

    for name, fn in (
        ("synth", cmd_synth), ("prepare", cmd_prepare), ("train", cmd_train),
    ):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(handler=lambda a, fn=fn: fn(_run_config(a)))

    p = sub.add_parser("optimize")
    common(p)
    p.add_argument("--budget", type=int, default=None, help="permutation budget (max 720)")
    p.set_defaults(handler=lambda a: cmd_optimize(_run_config(a)))

    p = sub.add_parser("forecast")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True, help="single feature row (csv or json)")
    p.add_argument("--standardizer", default=None)
    p.add_argument("--product", default=None)
    p.add_argument("--store", default=None)
    p.add_argument("--group", default=None)
    p.set_defaults(handler=cmd_forecast)

    p = sub.add_parser("importance")
    p.add_argument("--model", required=True)
    p.add_argument("--top-k", type=int, default=10)
    p.set_defaults(handler=cmd_importance)

    p = sub.add_parser("serve")
    p.add_argument("--models-dir", required=True)
    p.add_argument("--stores", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (domain.DomainError, dataprep.DataprepError, gbt.GbtError,
            metrics.MetricsError, hpo.HpoError, synthdata.InvalidConfig,
            OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
