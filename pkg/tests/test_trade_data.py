import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import toy1_matrix, toy1_records
from prodspace.trade_data import (
    CountryRegistry,
    EmptyYearError,
    ExportMatrix,
    IngestError,
    IngestFormat,
    ProductRegistry,
    SectorClass,
    TradeRecord,
    aggregate_exports,
    aggregate_years,
    classify_sector,
    normalize_hs6,
    parse_trade_records,
    validate_matrix,
)

REGISTRY = CountryRegistry.from_csv(io.StringIO("code,iso3,name\n404,KEN,Kenya\n842,USA,United States\n"))
BACI = IngestFormat(countries=REGISTRY)


def test_parse_baci_tea_row():
    res = parse_trade_records(b"t,i,j,k,v,q\n2005,404,842,090240,416653,1000\n", BACI)
    assert res.records == [TradeRecord(2005, "KEN", "USA", "090240", 416653.0, 1000.0)]
    assert res.errors == [] and res.warnings == []


def test_parse_pads_dropped_leading_zero():
    res = parse_trade_records(b"t,i,j,k,v,q\n2005,404,842,90240,1,\n", BACI)
    assert res.records[0].product == "090240"
    assert res.records[0].quantity is None


def test_parse_empty_stream_with_header():
    res = parse_trade_records(b"year,exporter,importer,product,value\n")
    assert res.records == [] and res.errors == []


def test_negative_value_is_row_error_with_line():
    data = b"t,i,j,k,v\n2005,404,842,090240,10\n2005,404,842,090240,-5\n"
    res = parse_trade_records(data, BACI)
    assert len(res.records) == 1
    assert len(res.errors) == 1
    assert res.errors[0].line == 3
    assert "negative" in res.errors[0].message
    assert "line,message,raw" in res.errors_csv()


def test_missing_mandatory_column_is_fatal():
    with pytest.raises(IngestError, match="value"):
        parse_trade_records(b"t,i,j,k\n2005,404,842,090240\n")


def test_unknown_country_kept_and_flagged():
    res = parse_trade_records(b"t,i,j,k,v\n2005,999,842,090240,3\n", BACI)
    assert res.records[0].exporter == "N999"
    assert len(res.warnings) == 1 and "N999" in res.warnings[0].message


def test_tab_delimited_named_columns():
    data = "year\texporter\timporter\tproduct\tvalue\n2004\tKEN\tUSA\t620462\t12.5\n"
    res = parse_trade_records(io.StringIO(data))
    assert res.records == [TradeRecord(2004, "KEN", "USA", "620462", 12.5)]


def test_year_range_filter_reports_rows():
    fmt = IngestFormat(years=(2003, 2005))
    res = parse_trade_records(b"t,i,j,k,v\n2002,1,2,010101,1\n2004,1,2,010101,1\n", fmt)
    assert [r.year for r in res.records] == [2004]
    assert res.errors[0].line == 2


def test_bad_product_code_rejected():
    res = parse_trade_records(b"t,i,j,k,v\n2005,1,2,12345678,1\n2005,1,2,abc,1\n")
    assert res.records == [] and len(res.errors) == 2


def test_aggregate_additivity():
    recs = [TradeRecord(2005, "A", "X", "010101", 3.0), TradeRecord(2005, "A", "Y", "010101", 4.0)]
    m = aggregate_exports(recs, 2005)
    assert m.values.tolist() == [[7.0]]


def test_aggregate_single_record():
    m = aggregate_exports([TradeRecord(2001, "A", "B", "010101", 5.5)], 2001)
    assert m.countries == ("A",) and m.products == ("010101",) and m.values.tolist() == [[5.5]]


def test_aggregate_toy1_records():
    assert aggregate_exports(toy1_records(), 2005) == toy1_matrix()


def test_aggregate_missing_year():
    with pytest.raises(EmptyYearError):
        aggregate_exports(toy1_records(), 1999)


def test_aggregate_years_shares_orderings():
    recs = toy1_records(2004) + [TradeRecord(2005, "D", "A", "s", 1.0)]
    mats = aggregate_years(recs, [2004, 2005])
    assert mats[2004].countries == mats[2005].countries == ("A", "B", "C", "D")
    assert mats[2004].products == ("p", "q", "r", "s")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ABCD"), st.sampled_from("ABCD"), st.sampled_from(["010101", "620462", "760110"]),
                          st.floats(0, 1e9, allow_nan=False)), min_size=1, max_size=40),
       st.randoms())
def test_aggregation_permutation_invariant_and_conserving(rows, rnd):
    recs = [TradeRecord(2005, e, i, p, v) for e, i, p, v in rows]
    cross = [r for r in recs if r.exporter != r.importer]
    if not cross:
        return
    a = aggregate_exports(recs, 2005)
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    b = aggregate_exports(shuffled, 2005)
    assert a == b
    assert np.array_equal(a.values, b.values)
    assert math.isclose(a.values.sum(), math.fsum(r.value for r in cross), rel_tol=1e-12, abs_tol=1e-6)


@pytest.mark.parametrize(
    "code,sector",
    [
        ("090240", SectorClass.AGRICULTURE_AND_FOOD),
        ("620462", SectorClass.TEXTILES_AND_GARMENTS),
        ("760110", SectorClass.OTHER),
        ("279999", SectorClass.AGRICULTURE_AND_FOOD),
        ("280000", SectorClass.OTHER),
        ("499999", SectorClass.OTHER),
        ("500000", SectorClass.TEXTILES_AND_GARMENTS),
        ("679999", SectorClass.TEXTILES_AND_GARMENTS),
        ("680000", SectorClass.OTHER),
        ("90240", SectorClass.AGRICULTURE_AND_FOOD),
    ],
)
def test_classify_sector(code, sector):
    assert classify_sector(code) is sector


def test_classify_sector_rejects_non_numeric():
    with pytest.raises(ValueError):
        classify_sector("09A240")


def test_normalize_hs6():
    assert normalize_hs6(90240) == "090240"
    assert normalize_hs6("90240.0") == "090240"


def test_validate_toy1():
    rep = validate_matrix(toy1_matrix())
    assert (rep.n_countries, rep.n_products, rep.world_total) == (3, 3, 120.0)
    assert rep.empty_countries == () and rep.empty_products == ()


def test_validate_all_zero_flags_everything():
    m = ExportMatrix(2005, ("A", "B"), ("p", "q"), np.zeros((2, 2)))
    rep = validate_matrix(m)
    assert rep.empty_countries == ("A", "B") and rep.empty_products == ("p", "q")
    assert not rep.ok


def test_validate_does_not_mutate():
    m = toy1_matrix()
    before = m.values.copy()
    validate_matrix(m)
    assert np.array_equal(before, m.values)
    with pytest.raises(ValueError):
        m.values[0, 0] = 1.0


def test_export_matrix_invariants():
    with pytest.raises(ValueError):
        ExportMatrix(2005, ("B", "A"), ("p",), [[1], [2]])
    with pytest.raises(ValueError):
        ExportMatrix(2005, ("A",), ("p",), [[-1]])


def test_product_registry_resolves_unknown_codes():
    reg = ProductRegistry.from_csv(io.StringIO('hs6,name\n90240,"Tea, black"\n'))
    assert reg.name("090240") == "Tea, black"
    assert reg.name("720918") == ""
    assert reg.resolve("620462").sector is SectorClass.TEXTILES_AND_GARMENTS


def test_registries_read_baci_metadata_layout():
    creg = CountryRegistry.from_csv(io.StringIO("country_code,country_name,country_iso2,country_iso3\n404,Kenya,KE,KEN\n"))
    assert creg.map("404") == "KEN" and creg.entries["404"].name == "Kenya"
    preg = ProductRegistry.from_csv(io.StringIO('code,description\n90240,"Tea, black"\n'))
    assert preg.name("090240") == "Tea, black"
