"""Forecasting promotion-efficiency indicators for grocery retail.

Subpackages: domain (data model and CSV ingestion), indicators (the six
per-promotion measures), dataprep (feature engineering and dataset
assembly), gbt (boosted regression trees), metrics (error measures), hpo
(hyperparameter search), synthdata (synthetic corpus generator), cli and
service (entry points).
"""

__version__ = "0.1.0"

__all__ = [
    "cli",
    "dataprep",
    "domain",
    "gbt",
    "hpo",
    "indicators",
    "metrics",
    "service",
    "synthdata",
]
