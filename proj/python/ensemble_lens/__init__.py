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
"""Diagnostics for weighted model ensembles.

Every analysis returns the same document as the HTTP service and the CLI.
Methods return parsed JSON; pass ``raw=True`` for the exact response text.
"""

import json
import os

from . import _ensemble_lens as _native

__all__ = [
    "Bundle",
    "EnsembleLensError",
    "acs",
    "ar",
    "crmse",
    "incompatibility",
    "msd",
    "rmsd",
    "sdr",
    "target_std",
    "uniformity",
]

msd = _native.msd
rmsd = _native.rmsd
sdr = _native.sdr
ar = _native.ar
crmse = _native.crmse
uniformity = _native.uniformity
incompatibility = _native.incompatibility
acs = _native.acs
target_std = _native.target_std


class EnsembleLensError(Exception):
    """An analysis failure; ``document`` is the service error document."""

    def __init__(self, document):
        error = document.get("error", {})
        super().__init__(f"{error.get('code', 'Error')}: {error.get('message', '')}")
        self.document = document
        self.code = error.get("code")
        self.message = error.get("message")


def _call(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except _native.Error as e:
        raise EnsembleLensError(json.loads(str(e))) from None


def _result(text, raw):
    return text if raw else json.loads(text)


class Bundle:
    """A loaded ensemble bundle: dataset, manifest, predictions."""

    def __init__(self, native):
        self._native = native

    @classmethod
    def load(cls, path):
        """Reads a bundle directory or a single bundle JSON document."""
        return cls(_call(_native.load_bundle, os.fspath(path)))

    @classmethod
    def from_document(cls, document, base_dir=""):
        """Builds a bundle from a document (dict or JSON text)."""
        text = document if isinstance(document, str) else json.dumps(document)
        return cls(_call(_native.parse_bundle, text, os.fspath(base_dir)))

    @property
    def task(self):
        return self._native.task

    @property
    def num_rows(self):
        return self._native.num_rows

    @property
    def model_ids(self):
        return list(self._native.model_ids)

    def summary(self, bundle_id="local", raw=False):
        return _result(_call(self._native.summary, bundle_id), raw)

    def metrics(self, raw=False):
        return _result(_call(self._native.metrics), raw)

    def compare(self, raw=False):
        return _result(_call(self._native.compare), raw)

    def correlation(self, method=None, raw=False):
        return _result(_call(self._native.correlation, method), raw)

    def compat(self, metric, threshold=None, xi=50.0, bins=20, raw=False):
        return _result(_call(self._native.compat, metric, threshold, xi, bins), raw)

    def pair(self, a, b, threshold=None, xi=50.0, bins=20, raw=False):
        return _result(_call(self._native.pair, a, b, threshold, xi, bins), raw)

    def evaluate(self, weights, holdout=None, raw=False):
        native_holdout = holdout._native if holdout is not None else None
        return _result(
            _call(self._native.evaluate, {k: float(v) for k, v in weights.items()}, native_holdout),
            raw,
        )

    def suggest(self, objective, direction=None, budget=500, seed=0, raw=False):
        return _result(_call(self._native.suggest, objective, direction, budget, seed), raw)

    def importance(self, model, repeats=5, seed=0, metric=None, normalize=False, raw=False):
        return _result(
            _call(self._native.importance, model, repeats, seed, metric, normalize), raw
        )

    def pdp(self, model, feature, grid=20, row_cap=None, raw=False):
        return _result(_call(self._native.pdp, model, feature, grid, row_cap), raw)

    def document(self):
        """The self-contained bundle document."""
        return json.loads(_call(self._native.document))

    def save(self, directory):
        """Writes the bundle in directory form."""
        _call(self._native.save, os.fspath(directory))
