from datetime import date as Date

import pytest
from hypothesis import given
from hypothesis import strategies as st

from promokit import domain
from promokit.domain import (
    Channels,
    DuplicateId,
    InvariantViolation,
    MalformedRow,
    PromotionWindow,
    Receipt,
    ReceiptLine,
    StoreProfile,
    UnknownReference,
)


def _window(**kw):
    base = dict(
        store_id="S1",
        product_id="P1",
        start_date=Date(2017, 3, 6),
        end_date=Date(2017, 3, 10),
        promo_price=2.5,
        price_change=0.3,
    )
    base.update(kw)
    return PromotionWindow(**base)


class TestPromotionWindow:
    def test_duration(self):
        assert _window().duration_days == 5
        assert _window(end_date=Date(2017, 3, 6)).duration_days == 1

    def test_longer_than_seven_days_rejected(self):
        with pytest.raises(InvariantViolation):
            _window(end_date=Date(2017, 3, 13))

    def test_end_before_start_rejected(self):
        with pytest.raises(InvariantViolation):
            _window(end_date=Date(2017, 3, 5))

    @pytest.mark.parametrize("pc", [-0.1, 1.0, 1.5])
    def test_price_change_range(self, pc):
        with pytest.raises(InvariantViolation):
            _window(price_change=pc)

    def test_zero_price_change_is_matched_period(self):
        w = _window(price_change=0.0)
        assert not w.is_promotion
        assert _window().is_promotion

    def test_days_iterates_inclusive(self):
        days = list(_window().days())
        assert len(days) == 5
        assert days[0] == Date(2017, 3, 6)
        assert days[-1] == Date(2017, 3, 10)

    @given(
        s1=st.integers(0, 40), d1=st.integers(0, 6),
        s2=st.integers(0, 40), d2=st.integers(0, 6),
    )
    def test_overlaps_symmetric(self, s1, d1, s2, d2):
        from datetime import timedelta

        base = Date(2017, 1, 1)
        a = _window(start_date=base + timedelta(days=s1),
                    end_date=base + timedelta(days=s1 + d1))
        b = _window(start_date=base + timedelta(days=s2),
                    end_date=base + timedelta(days=s2 + d2))
        assert a.overlaps(b) == b.overlaps(a)
        # interval arithmetic cross-check
        expected = not (a.end_date < b.start_date or b.end_date < a.start_date)
        assert a.overlaps(b) == expected

    def test_overlap_requires_same_store(self):
        a = _window()
        b = _window(store_id="S2")
        assert not a.overlaps(b)


class TestReceipt:
    def test_total_value(self):
        r = Receipt("R1", "S1", Date(2017, 1, 1),
                    (ReceiptLine("P1", 2.0, 3.0), ReceiptLine("P2", 1.0, 1.5)))
        assert r.total_value == 4.5

    def test_empty_receipt_rejected(self):
        with pytest.raises(InvariantViolation):
            Receipt("R1", "S1", Date(2017, 1, 1), ())

    @pytest.mark.parametrize("qty", [0.0, -1.0])
    def test_nonpositive_quantity_rejected(self, qty):
        with pytest.raises(InvariantViolation):
            ReceiptLine("P1", qty, 1.0)

    def test_negative_line_value_rejected(self):
        with pytest.raises(InvariantViolation):
            ReceiptLine("P1", 1.0, -0.5)


class TestChannels:
    def test_any_main_excludes_other(self):
        assert not Channels(other=True).any_main
        assert Channels(other=True).any
        assert Channels(radio=True).any_main

    def test_as_tuple_order(self):
        assert Channels(tv=True).as_tuple() == (True, False, False, False)


class TestStoreProfile:
    def test_negative_attribute_rejected(self):
        with pytest.raises(InvariantViolation):
            StoreProfile("S1", {"n_competitors": -1.0})

    def test_non_finite_attribute_rejected(self):
        with pytest.raises(InvariantViolation):
            StoreProfile("S1", {"tourism_ratio": float("nan")})


class TestCsvRoundTrip:
    def test_all_four_files(self, tmp_path, small_corpus):
        domain.save_catalog(tmp_path / "catalog.csv", small_corpus.catalog)
        domain.save_stores(tmp_path / "stores.csv", small_corpus.stores)
        domain.save_promotions(tmp_path / "promotions.csv", small_corpus.promotions)
        domain.save_receipts(tmp_path / "receipts.csv", small_corpus.receipts)

        catalog = domain.load_catalog(tmp_path / "catalog.csv")
        stores = domain.load_stores(tmp_path / "stores.csv")
        promotions = domain.load_promotions(tmp_path / "promotions.csv", catalog, stores)
        receipts = domain.load_receipts(tmp_path / "receipts.csv", catalog)

        assert catalog == small_corpus.catalog
        assert stores == small_corpus.stores
        assert promotions == small_corpus.promotions
        assert receipts == small_corpus.receipts


class TestIngestionErrors:
    def test_malformed_row_reports_line_number(self, tmp_path):
        p = tmp_path / "catalog.csv"
        p.write_text("product_id,group,sold_by\nP1,veg,unit\nP2,veg,carton\n")
        with pytest.raises(MalformedRow) as exc:
            domain.load_catalog(p)
        assert exc.value.line_no == 3

    def test_duplicate_product_id(self, tmp_path):
        p = tmp_path / "catalog.csv"
        p.write_text("product_id,group,sold_by\nP1,veg,unit\nP1,veg,weight\n")
        with pytest.raises(DuplicateId):
            domain.load_catalog(p)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "catalog.csv"
        p.write_text("id,group,sold_by\n")
        with pytest.raises(MalformedRow):
            domain.load_catalog(p)

    def test_unknown_product_in_receipts(self, tmp_path):
        p = tmp_path / "receipts.csv"
        p.write_text(
            "receipt_id,store_id,date,product_id,quantity,line_value\n"
            "R1,S1,2017-01-01,P9,1.0,2.0\n"
        )
        with pytest.raises(UnknownReference):
            domain.load_receipts(p, catalog=[domain.ProductRef("P1", "veg", domain.SoldBy.UNIT)])

    def test_inconsistent_receipt_lines(self, tmp_path):
        p = tmp_path / "receipts.csv"
        p.write_text(
            "receipt_id,store_id,date,product_id,quantity,line_value\n"
            "R1,S1,2017-01-01,P1,1.0,2.0\n"
            "R1,S2,2017-01-01,P1,1.0,2.0\n"
        )
        with pytest.raises(InvariantViolation):
            domain.load_receipts(p)

    def test_bad_boolean_in_promotions(self, tmp_path):
        p = tmp_path / "promotions.csv"
        p.write_text(
            "store_id,product_id,start_date,end_date,promo_price,price_change,"
            "tv,radio,internet,other\n"
            "S1,P1,2017-01-01,2017-01-03,2.0,0.2,yes,0,0,0\n"
        )
        with pytest.raises(MalformedRow):
            domain.load_promotions(p)

    def test_missing_store_attribute(self, tmp_path):
        p = tmp_path / "stores.csv"
        p.write_text("store_id,inhabitants_1km\nS1,1000\n")
        with pytest.raises(MalformedRow):
            domain.load_stores(p)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "catalog.csv"
        p.write_text("")
        with pytest.raises(MalformedRow):
            domain.load_catalog(p)
