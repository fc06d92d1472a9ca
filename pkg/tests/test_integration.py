import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_exports
from prodspace import metrics as mx
from prodspace.integration import (
    GainEntry,
    Mode,
    ScenarioSpec,
    combine_max_rca,
    combine_pooled_exports,
    density_delta,
    rank_density_gains,
    run_scenario,
    sector_decomposition,
)


def test_max_rca_toy1(toy1_rca):
    rows = [toy1_rca.row(c) for c in "ABC"]
    assert combine_max_rca(rows)[1] == pytest.approx(3.0, abs=1e-12)
    assert combine_max_rca([toy1_rca.row("B")] * 2).tolist() == toy1_rca.row("B").tolist()
    with pytest.raises(ValueError):
        combine_max_rca(np.zeros((0, 3)))


def test_pooled_toy1(toy1, toy1_rca):
    pooled = combine_pooled_exports(["A", "B"], toy1)
    assert pooled[0] == pytest.approx(4.0, abs=1e-9)
    assert pooled[2] == 0.0
    assert np.allclose(combine_pooled_exports(["C"], toy1), toy1_rca.row("C"), rtol=0, atol=1e-12)
    with pytest.raises(ValueError):
        combine_pooled_exports([], toy1)


def test_pooled_everyone_is_world(toy1):
    assert np.allclose(combine_pooled_exports(list(toy1.countries), toy1), 1.0, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_pooled_everyone_is_world_random(seed):
    x = random_exports(np.random.default_rng(seed))
    r = combine_pooled_exports(list(x.countries), x)
    traded = x.values.sum(axis=0) > 0
    assert np.allclose(r[traded], 1.0, rtol=0, atol=1e-9)


def test_density_delta_toy1(toy1_rca, toy1_m, toy1_phi):
    region = combine_max_rca([toy1_rca.row("A"), toy1_rca.row("C")]) >= 1.0
    assert region.tolist() == [True, False, True]
    d = density_delta(toy1_m.row("C"), region, toy1_phi)
    assert d[1] == pytest.approx(1.0, abs=1e-9)
    assert (d >= 0).all()
    assert density_delta(toy1_m.row("C"), toy1_m.row("C"), toy1_phi).tolist() == [0.0, 0.0, 0.0]


def test_rank_gains_toy1(toy1_rca, toy1_m, toy1_phi):
    region = combine_max_rca([toy1_rca.row("A"), toy1_rca.row("C")]) >= 1.0
    d = density_delta(toy1_m.row("C"), region, toy1_phi)
    # RCA_C,q = 2/3, so q only qualifies once the candidate cutoff exceeds it
    ranked = rank_density_gains(toy1_phi.products, d, toy1_rca.row("C"), cutoff=1.0)
    assert ranked[0].product == "q" and not ranked[0].zero_gain
    assert [e.product for e in ranked] == ["q", "p"] and ranked[1].zero_gain
    default = rank_density_gains(toy1_phi.products, d, toy1_rca.row("C"))
    assert [e.product for e in default] == ["p"]


def test_rank_gains_region_equals_member_keeps_zero_entries():
    ranked = rank_density_gains(("b", "a", "c"), [0.0, 0.0, 0.0], [0.0, 0.1, 0.2], n=2)
    assert [e.product for e in ranked] == ["a", "b"]
    assert all(e.zero_gain for e in ranked)


def test_rank_gains_order_and_truncation():
    ranked = rank_density_gains(("x", "w", "y", "z"), [0.2, 0.2, 0.5, 0.9], [0.0, 0.0, 0.0, 0.7], n=2)
    assert [e.product for e in ranked] == ["y", "w"]
    assert isinstance(ranked[0], GainEntry)


def test_sector_decomposition_arithmetic():
    codes = [f"{10000 + i:06d}" for i in range(75)] + [f"{500000 + i:06d}" for i in range(45)] + [
        f"{800000 + i:06d}" for i in range(30)
    ]
    dec = sector_decomposition(codes, 150)
    assert dec.fractions == {"AgricultureAndFood": 0.5, "TextilesAndGarments": 0.3, "Other": 0.2}
    assert dec.count == 150
    short = sector_decomposition(codes[:10], 150)
    assert short.count == 10 and short.fractions["AgricultureAndFood"] == 1.0
    assert sector_decomposition([], 150).count == 0


def test_scenario_spec_validation():
    with pytest.raises(ValueError):
        ScenarioSpec(("A", "A"))
    with pytest.raises(ValueError):
        ScenarioSpec(("A", "B"), top_n=0)
    with pytest.raises(ValueError):
        ScenarioSpec(("A", "B"), mode="bogus")
    assert ScenarioSpec(["A", "B"], "pooled").mode is Mode.POOLED_EXPORTS


def _scenario_inputs(seed):
    x = random_exports(np.random.default_rng(seed))
    phi = mx.proximity(mx.binarize(mx.rca(x)))
    return x, phi


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_max_rca_scenario_invariants(seed, data):
    x, phi = _scenario_inputs(seed)
    k = data.draw(st.integers(2, len(x.countries)))
    members = tuple(data.draw(st.permutations(x.countries))[:k])
    res = run_scenario(ScenarioSpec(members, top_n=5), x, phi)
    r = mx.rca(x)
    ors = np.zeros(len(phi.products), bool)
    for m in members:
        ors |= r.row(m) >= 1.0
        assert (res.deltas[m] >= 0).all()
        assert sum(res.decomposition[m].fractions.values()) == pytest.approx(1.0, abs=1e-12) or res.decomposition[m].count == 0
        assert len(res.rankings[m]) <= 5
    assert res.regional_m_row.tolist() == ors.tolist()
    assert (res.regional_density[None, :] >= np.vstack([res.member_density[m] for m in members]) - 1e-15).all()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_adding_member_never_lowers_gains(seed, data):
    x, phi = _scenario_inputs(seed)
    if len(x.countries) < 3:
        return
    order = data.draw(st.permutations(x.countries))
    small = run_scenario(ScenarioSpec(tuple(order[:2])), x, phi)
    big = run_scenario(ScenarioSpec(tuple(order[:3])), x, phi)
    for m in order[:2]:
        assert (big.deltas[m] >= small.deltas[m] - 1e-15).all()


def test_scenario_outputs_toy1(toy1, toy1_phi):
    res = run_scenario(ScenarioSpec(("A", "C"), rca_cutoff_for_candidates=1.0), toy1, toy1_phi)
    assert res.rankings["C"][0].product == "q"
    assert res.rankings["C"][0].delta == pytest.approx(1.0, abs=1e-9)
    doc = json.loads(res.to_json())
    assert doc["regional_products"] == ["p", "r"]
    assert doc["meta"]["tie_break"] == "hs6 ascending"
    assert doc["rankings"]["C"][0]["code"] == "q"
    lines = res.rankings_csv().splitlines()
    assert lines[0] == "A,,C,"
    assert lines[1] == "HS-6 code,Product Name,HS-6 code,Product Name"
    assert res.to_json() == run_scenario(ScenarioSpec(("A", "C"), rca_cutoff_for_candidates=1.0), toy1, toy1_phi).to_json()


def test_pooled_scenario_runs(toy1, toy1_phi):
    res = run_scenario(ScenarioSpec(("A", "B"), mode="pooled"), toy1, toy1_phi)
    assert res.regional_rca[0] == pytest.approx(4.0)
    assert res.spec.as_dict()["mode"] == "pooled"
