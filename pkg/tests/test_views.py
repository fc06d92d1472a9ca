import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_exports, toy1_matrix
from prodspace import metrics as mx
from prodspace.trade_data import ExportMatrix
from prodspace.views import (
    Growth,
    Tier,
    density_sophistication_scatter,
    export_value_view,
    opportunities_view,
    opportunity_table,
    rank_deciles,
    rca_view,
    scatter_csv,
    table_csv,
    table_header,
    tier_for,
    top_exports_table,
)


def test_tier_boundaries():
    assert tier_for(1.0) is Tier.STRONG
    assert tier_for(0.9999) is Tier.MARGINAL
    assert tier_for(0.1) is Tier.MARGINAL
    assert tier_for(0.0999) is Tier.ABSENT
    assert tier_for(0.0) is Tier.ABSENT


def test_rca_view_toy1(toy1_rca):
    c = {a.product: a.tier for a in rca_view("C", toy1_rca)}
    assert c == {"p": Tier.ABSENT, "q": Tier.MARGINAL, "r": Tier.STRONG}
    with pytest.raises(KeyError):
        rca_view("Z", toy1_rca)


def test_export_value_view_growth():
    x0 = toy1_matrix(2003)
    x1 = ExportMatrix(2005, ("A", "B", "C"), ("p", "q", "r"), [[12, 0, 0], [10, 5, 0], [0, 10, 80]])
    ann = {a.product: a for a in export_value_view("B", x0, x1)}
    assert ann["p"].growth is Growth.FLAT and ann["p"].size_value == 10
    assert ann["q"].growth is Growth.DECREASED
    assert ann["r"].growth is Growth.FLAT and ann["r"].size_value == 0
    a = {n.product: n for n in export_value_view("A", x0, x1)}
    assert a["p"].growth is Growth.INCREASED and a["p"].tier is Tier.STRONG


def test_export_value_view_country_new_in_year1():
    x0 = ExportMatrix(2003, ("A",), ("p",), [[1.0]])
    x1 = ExportMatrix(2005, ("A", "B"), ("p",), [[1.0], [2.0]])
    (b,) = export_value_view("B", x0, x1)
    assert b.growth is Growth.INCREASED


def test_rank_deciles():
    assert rank_deciles(0) == []
    assert rank_deciles(1) == [1]
    assert rank_deciles(2) == [1, 10]
    assert rank_deciles(10) == list(range(1, 11))
    d = rank_deciles(25)
    assert d[0] == 1 and d[-1] == 10 and d == sorted(d)
    sizes = np.bincount(d)[1:]
    assert sizes.max() - sizes.min() <= 1


@pytest.mark.parametrize("n", range(1, 60))
def test_rank_deciles_properties(n):
    d = rank_deciles(n)
    assert len(d) == n and d == sorted(d) and d[0] == 1
    assert all(1 <= v <= 10 for v in d)
    if n > 1:
        assert d[-1] == 10


def test_opportunities_view_toy1(toy1_rca, toy1_m, toy1_phi):
    dens = mx.density(toy1_m.row("A"), toy1_phi, "A")
    ann = {a.product: a for a in opportunities_view("A", dens, toy1_rca)}
    assert ann["p"].decile is None and ann["p"].tier is Tier.STRONG
    assert ann["q"].decile == 1
    assert ann["r"].decile == 10


def test_top_exports_table_ties_by_code(toy1, toy1_rca):
    rows = top_exports_table("B", None, toy1_rca, None, toy1, None, None, n=3)
    assert [r.product for r in rows] == ["p", "q", "r"]
    assert [r.rank for r in rows] == [1, 2, 3]
    assert rows[0].share_y1 == rows[1].share_y1 == 0.5
    by_rca = top_exports_table("C", None, toy1_rca, None, toy1, None, None, sort="rca", n=2)
    assert [r.product for r in by_rca] == ["r", "q"]
    with pytest.raises(ValueError):
        top_exports_table("B", None, toy1_rca, None, toy1, None, None, sort="bogus")
    with pytest.raises(KeyError):
        top_exports_table("Z", None, toy1_rca, None, toy1, None, None)


def test_opportunity_table_and_soph_filter(toy1, toy1_rca, toy1_m, toy1_phi):
    dens = mx.density(toy1_m.row("A"), toy1_phi, "A")
    soph = mx.sophistication(toy1_m, 1)
    rows = opportunity_table("A", dens, toy1_rca, soph, x1=toy1)
    assert [r.product for r in rows] == ["q", "r"]
    assert rows[0].density == pytest.approx(1.0)
    above = opportunity_table("A", dens, toy1_rca, soph, require_soph_above_avg=True)
    assert [r.product for r in above] == ["q"]
    assert all(r.sophistication > 0 for r in above)


def test_table_csv_format(toy1, toy1_rca):
    rows = top_exports_table("B", toy1_rca, toy1_rca, toy1, toy1, None, None, n=2)
    text = table_csv(rows, 2003, 2005)
    recs = list(csv.reader(io.StringIO(text)))
    assert recs[0] == table_header(2003, 2005)
    assert recs[0][7] == "Export Share 2005"
    assert recs[1][:2] == ["1", "p"] and recs[1][7] == "50.00%"
    assert recs[1][9] == ""  # no sophistication supplied
    assert text == table_csv(rows, 2003, 2005)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_shares_match_export_shares(seed):
    x = random_exports(np.random.default_rng(seed))
    r = mx.rca(x)
    country = x.countries[0]
    rows = top_exports_table(country, None, r, None, x, None, None, n=len(x.products))
    want = dict(zip(x.products, mx.export_shares(x, country).values.tolist()))
    for row in rows:
        assert row.share_y1 == want[row.product]
    vals = [row.exports_y1 for row in rows]
    assert vals == sorted(vals, reverse=True)


def test_scatter_toy1(toy1_rca, toy1_phi):
    soph = mx.sophistication(mx.binarize(toy1_rca), 1)
    pts = density_sophistication_scatter([("A", toy1_rca.row("A"))], toy1_phi, soph)
    assert [(p.product, p.density) for p in pts] == [("q", 1.0), ("r", 0.0)]
    assert pts[0].sophistication == pytest.approx(1.224744871391589)
    text = scatter_csv(pts)
    assert text.splitlines()[0] == "owner,hs6,density,sophistication"
    with pytest.raises(ValueError):
        density_sophistication_scatter([("A", [1.0])], toy1_phi, soph)


def test_scatter_blank_for_undefined_sophistication(toy1_rca, toy1_phi):
    soph = mx.SophisticationVector(("p", "q", "r"), [0.0, math.nan, 1.0], 1)
    pts = density_sophistication_scatter([("A", toy1_rca.row("A"))], toy1_phi, soph)
    assert scatter_csv(pts).splitlines()[1] == "A,q,1.0,"
