import csv
import io
import math
import os
import subprocess

import pytest

import scrapsig


def test_dilution_worked_shipment():
    r = scrapsig.dilution_model(10, 2, 20000.0, 5.0, 0.5)
    assert r.declared_value == 1_000_000.0
    assert r.actual_value == 820_000.0
    assert r.blended_price == 4.1


def test_duty_gap_and_basel():
    assert scrapsig.duty_gap("3902", "3915", 100_000.0) == (23000.0, 26000.0)
    row = scrapsig.basel_overlap("390410")
    assert row["a3210"] is True
    assert row["note"] == "PVC is explicitly listed under A3210"


def test_errors_map_to_python():
    with pytest.raises(scrapsig._core.ConfigError):
        scrapsig.duty_gap("3926", "3915", 1.0)
    with pytest.raises(ValueError):
        scrapsig.compute_features("390210", [2020], [1.0, 2.0], [1.0])


def test_features_and_signature():
    fv = scrapsig.compute_features("390210", [2020, 2021, 2022], [100, 200, 300], [300, 400, 300])
    d = fv.as_dict()
    assert d["kg_trend"] == pytest.approx(100.0)
    assert d["price_trend"] == pytest.approx(-1.0)
    assert d["log_avg_kg"] == pytest.approx(math.log1p(200.0))
    assert fv.signature
    (res,) = scrapsig.detect_signature_codes([fv])
    assert res.strong_signature


def test_ols_against_numpy():
    np = pytest.importorskip("numpy")
    rng = np.random.default_rng(0)
    x = np.arange(2015, 2025, dtype=float)
    y = rng.normal(size=x.size) * 1e3
    assert scrapsig.ols_slope(list(x), list(y)) == pytest.approx(np.polyfit(x, y, 1)[0], rel=1e-12)


def test_archetype_corpus_round_trip():
    trade, labels = scrapsig.synth_corpus("archetype", 32, 42)
    rows = list(csv.DictReader(io.StringIO(trade)))
    truth = {r["hs_code"]: r["label"] for r in csv.DictReader(io.StringIO(labels))}
    assert len(truth) == 128
    by_code = {}
    for r in rows:
        by_code.setdefault(r["hs_code"], []).append(r)
    vectors = [
        scrapsig.compute_features(
            code,
            [int(r["year"]) for r in rs],
            [float(r["mass_kg"]) for r in rs],
            [float(r["value_usd"]) for r in rs],
        )
        for code, rs in sorted(by_code.items())
    ]
    z = scrapsig.zscore(vectors)
    curve, k = scrapsig.elbow_scan(z, 1, 10, 42)
    assert k == 4
    labels_, _, _ = scrapsig.kmeans_fit(z, 4, 42)
    sklearn = pytest.importorskip("sklearn.metrics")
    names = sorted(set(truth.values()))
    y = [names.index(truth[v.hs_code]) for v in vectors]
    assert sklearn.adjusted_rand_score(y, labels_) >= 0.95


def test_forest_shap_efficiency():
    x = [[float(i % 7), float(i % 3), float(i)] for i in range(40)]
    y = [int(r[0] > 3) for r in x]
    f = scrapsig.RandomForest(x, y, ["a", "b", "c"], ["lo", "hi"], n_trees=10, seed=1)
    base, phi = f.shap(x[5])
    p = f.predict_proba(x[5])
    for c in range(2):
        assert base[c] + sum(row[c] for row in phi) == pytest.approx(p[c], abs=1e-12)


@pytest.mark.skipif("SCRAPSIG_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_synth_exit_code(tmp_path):
    cli = os.environ["SCRAPSIG_CLI"]
    out = tmp_path / "t.csv"
    assert subprocess.run([cli, "synth", "--kind", "poisoning", "--out", str(out)]).returncode == 0
    assert out.read_text().startswith("hs_code,year")
    bad = subprocess.run([cli, "segment", "--out", str(tmp_path / "none")], capture_output=True)
    assert bad.returncode == 2
