import pytest

from promokit import cli, dataprep, synthdata

PIPELINE_CONFIG = """\
seed = 5
training_years = 2016
test_year = 2017
budget = 1
synth_n_stores = 2
synth_n_products_per_group = 2
synth_n_years = 2
"""


@pytest.fixture(scope="session")
def pipeline_dir(tmp_path_factory):
    """Artifacts of one full CLI run: data, datasets, models and reports."""
    root = tmp_path_factory.mktemp("pipeline")
    config = root / "run.cfg"
    config.write_text(PIPELINE_CONFIG)
    out = root / "out"
    for command in ("synth", "prepare", "train", "optimize"):
        code = cli.main([command, "--config", str(config), "--out", str(out)])
        assert code == 0, command
    return out


@pytest.fixture(scope="session")
def small_corpus():
    """A tiny deterministic corpus: 2 stores, 6 products, 2 years."""
    config = synthdata.GenConfig(
        seed=1, n_stores=2, n_products_per_group=2, n_years=2, start_year=2016
    )
    return synthdata.generate(config)


@pytest.fixture(scope="session")
def small_splits(small_corpus):
    config = dataprep.DatasetConfig(training_years=(2016,), test_year=2017)
    return dataprep.assemble_datasets(
        small_corpus.promotions,
        small_corpus.receipts,
        small_corpus.stores,
        small_corpus.catalog,
        config,
    )
