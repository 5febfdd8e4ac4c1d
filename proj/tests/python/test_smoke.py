import json
import os
import pathlib

import numpy as np
import pytest

cdofit = pytest.importorskip("cdofit")

DATA = pathlib.Path(os.environ.get("CDOFIT_DATA", pathlib.Path(__file__).parents[2] / "data"))
SNAPSHOT = DATA / "itraxx_europe_s42_2025-03-28.json"


@pytest.fixture(scope="module")
def snap():
    return cdofit.load_snapshot(str(SNAPSHOT))


def test_snapshot_fields(snap):
    assert snap.names == 125
    assert snap.periods == 20
    assert snap.index_spread == pytest.approx(0.0058)
    assert [t["kind"] for t in snap.tranches] == ["upfront", "upfront", "spread", "spread"]
    assert cdofit.implied_index_spread(snap, snap.hazard) == pytest.approx(0.0058, abs=1e-12)


def test_malformed_json_raises():
    with pytest.raises(cdofit.Error, match="MalformedSnapshot"):
        cdofit.parse_snapshot("{not json")


def test_weak_dpm_is_valid(snap):
    r = cdofit.verify_weak(snap)
    assert r["compatible"]
    q = r["dpm"]
    assert q.shape == (20, 126)
    assert np.allclose(q.sum(axis=1), 1.0, atol=1e-9)
    assert q.min() >= 0.0
    mean = q @ np.arange(126)
    assert np.allclose(mean, 125 * np.array(snap.marginal[1:21]), atol=1e-7)


def test_incompatible_equity_quote(snap):
    doc = json.loads(snap.to_json())
    doc["tranches"][0]["quote_value"] = 99.0
    r = cdofit.verify_weak(cdofit.parse_snapshot(json.dumps(doc)))
    assert not r["compatible"]
    assert 0 in r["conflicting_tranches"]


def test_strong_and_simulation(snap):
    r = cdofit.verify_strong(snap, resolution=50)
    assert r["compatible"]
    p = r["generator"]
    assert p.shape == (20, 51)
    a = cdofit.simulate(snap, p, paths=2000, seed=3, positions=[-4, 2, -1, 0])
    b = cdofit.simulate(snap, p, paths=2000, seed=3, positions=[-4, 2, -1, 0], threads=2)
    assert a["portfolio"] == b["portfolio"]
    assert a["waterfall_violations"] == 0


def test_bounds_contain_quotes(snap):
    b = cdofit.tranche_bounds(snap, 0.06, 0.12)
    assert b["lower"] <= 0.010632 <= b["upper"]
    rng = cdofit.tranche_range(snap, 3, resolution=50)
    assert rng["lower"] <= 0.002744 <= rng["upper"]


def test_hedge_deltas_sum_near_one(snap):
    h = cdofit.spread_delta(snap)
    assert 0.97 <= sum(h["delta"]) <= 1.03
