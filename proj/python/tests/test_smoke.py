# Copyright 2026 The ensemble-lens Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Smoke tests for the Python module against the CLI and direct formulas."""

import json
import math
import os
import random
import subprocess

import pytest

import ensemble_lens as el

CLI = os.environ.get("ENSEMBLE_LENS_CLI")


def regression_document(n=40, seed=3):
    rng = random.Random(seed)
    rows, pa, pb = [], [], []
    for _ in range(n):
        x1, x2 = rng.uniform(-2, 2), rng.uniform(-2, 2)
        y = 2.0 * x1 + 0.5 * x2 + rng.gauss(0, 0.3)
        rows.append([x1, x2, y])
        pa.append(2.0 * x1)
        pb.append(x1 + x2)
    return {
        "manifest": {
            "task": "regression",
            "target_column": "y",
            "features": [{"name": "x1", "kind": "numeric"}, {"name": "x2", "kind": "numeric"}],
            "models": [
                {
                    "id": "a",
                    "weight": 1.0,
                    "predictor": {
                        "kind": "builtin",
                        "spec": {"kind": "linear", "features": ["x1", "x2"],
                                 "intercept": 0.0, "coefficients": [2.0, 0.0]},
                    },
                },
                {
                    "id": "b",
                    "weight": 3.0,
                    "predictor": {
                        "kind": "builtin",
                        "spec": {"kind": "linear", "features": ["x1", "x2"],
                                 "intercept": 0.0, "coefficients": [1.0, 1.0]},
                    },
                },
            ],
        },
        "dataset": {"columns": ["x1", "x2", "y"], "rows": rows},
        "predictions": {"a": pa, "b": pb},
    }


def binary_document():
    y = [0, 1, 1, 0, 1, 0, 1, 1, 0, 0]
    a = [0, 1, 0, 0, 1, 1, 1, 1, 0, 0]
    b = [1, 1, 1, 0, 0, 0, 1, 1, 0, 1]
    return {
        "manifest": {
            "task": "binary",
            "target_column": "label",
            "class_labels": ["0", "1"],
            "positive_label": "1",
            "features": [{"name": "x", "kind": "numeric"}],
            "models": [{"id": "a"}, {"id": "b"}],
        },
        "dataset": {"columns": ["x", "label"], "rows": [[float(i), v] for i, v in enumerate(y)]},
        "predictions": {"a": a, "b": b},
    }


@pytest.fixture(scope="module")
def regression():
    return el.Bundle.from_document(regression_document())


def run_cli(tmp_path, document, *args):
    bundle = tmp_path / "bundle.json"
    bundle.write_text(json.dumps(document))
    out = tmp_path / "out.json"
    subprocess.run([CLI, *args, "--bundle", str(bundle), "--out", str(out)], check=True)
    return out.read_text()


def test_bundle_properties(regression):
    assert regression.task == "regression"
    assert regression.num_rows == 40
    assert regression.model_ids == ["a", "b"]


def test_metrics_ensemble_is_weighted_mean(regression):
    doc = regression_document()
    y = [r[2] for r in doc["dataset"]["rows"]]
    ens = [(pa + 3.0 * pb) / 4.0 for pa, pb in zip(doc["predictions"]["a"], doc["predictions"]["b"])]
    rmse = math.sqrt(sum((e - t) ** 2 for e, t in zip(ens, y)) / len(y))
    reports = {m["model_id"]: m["metrics"] for m in regression.metrics()["reports"]}
    assert reports["ensemble"]["RMSE"] == pytest.approx(rmse, rel=1e-12)


@pytest.mark.skipif(not CLI, reason="CLI path not provided")
@pytest.mark.parametrize(
    "method,cli_args",
    [
        ("metrics", ["metrics"]),
        ("compare", ["compare"]),
        ("correlation", ["correlation"]),
    ],
)
def test_documents_match_cli_bytes(tmp_path, regression, method, cli_args):
    assert getattr(regression, method)(raw=True) == run_cli(tmp_path, regression_document(), *cli_args)


@pytest.mark.skipif(not CLI, reason="CLI path not provided")
def test_compat_matches_cli_bytes(tmp_path, regression):
    text = run_cli(tmp_path, regression_document(), "compat", "--metric", "rmsd")
    assert regression.compat("rmsd", raw=True) == text


def test_scalar_metrics():
    a, b = [1.0, 2.0, 4.0], [1.5, 2.0, 3.0]
    assert el.msd(a, b) == pytest.approx((0.25 + 0.0 + 1.0) / 3, rel=1e-15)
    assert el.rmsd(a, b) == pytest.approx(math.sqrt(1.25 / 3), rel=1e-15)
    assert el.sdr(a, b, threshold=0.4) == pytest.approx(2 / 3)
    ya, yb, y = [0, 1, 1, 0], [0, 1, 0, 1], [0, 1, 1, 1]
    assert el.uniformity(ya, yb) + el.incompatibility(ya, yb) == 1.0
    assert el.uniformity(ya, yb) == pytest.approx(0.5)


def test_binary_compat_uniformity_matches_function():
    doc = binary_document()
    bundle = el.Bundle.from_document(doc)
    a, b = doc["predictions"]["a"], doc["predictions"]["b"]
    y = [row[1] for row in doc["dataset"]["rows"]]
    result = bundle.pair("a", "b")
    assert result["uniformity"] == el.uniformity(a, b)
    assert result["incompatibility"] == el.incompatibility(a, b)
    assert result["acs"] == el.acs(a, b, y)
    assert result["uniformity"] == sum(p == q for p, q in zip(a, b)) / len(a)


def test_importance_of_unused_feature_is_zero(regression):
    result = regression.importance("a", repeats=3, seed=11)
    by_feature = {f["name"]: f for f in result["features"]}
    assert by_feature["x2"]["mean_drop"] == 0.0
    assert by_feature["x1"]["mean_drop"] > 0.0
    assert regression.importance("a", repeats=3, seed=11, raw=True) == regression.importance(
        "a", repeats=3, seed=11, raw=True
    )


def test_pdp_of_linear_model_has_its_slope(regression):
    curve = regression.pdp("a", "x1", grid=5)
    xs, ys = curve["grid"], curve["averages"]
    for (x0, y0), (x1, y1) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
        assert (y1 - y0) / (x1 - x0) == pytest.approx(2.0, rel=1e-9)


def test_suggest_is_deterministic(regression):
    first = regression.suggest("RMSE", budget=50, seed=7, raw=True)
    assert first == regression.suggest("RMSE", budget=50, seed=7, raw=True)


def test_evaluate_with_manifest_weights(regression):
    result = regression.evaluate({"a": 1.0, "b": 3.0})
    assert result["normalized_weights"] == {"a": 0.25, "b": 0.75}
    assert all(v == 0.0 for v in result["delta"].values())
    shifted = regression.evaluate({"a": 1.0, "b": 0.0})
    metrics = {m["model_id"]: m["metrics"] for m in regression.metrics()["reports"]}
    assert shifted["candidate"]["metrics"]["RMSE"] == pytest.approx(metrics["a"]["RMSE"], rel=1e-12)


def test_errors_carry_code_and_document(regression):
    with pytest.raises(el.EnsembleLensError) as info:
        regression.importance("missing")
    assert info.value.code == "UnknownModel"
    assert info.value.document["error"]["code"] == "UnknownModel"
    with pytest.raises(el.EnsembleLensError) as info:
        el.Bundle.from_document("{not json")
    assert info.value.code


def test_save_and_load_round_trip(tmp_path, regression):
    regression.save(tmp_path / "saved")
    loaded = el.Bundle.load(tmp_path / "saved")
    assert loaded.metrics(raw=True) == regression.metrics(raw=True)
    assert loaded.document() == regression.document()
