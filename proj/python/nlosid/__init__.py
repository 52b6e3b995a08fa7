# Copyright 2026 The nlosid Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Spatial NLOS identification from beam-sweep power angular spectra.

Thin wrappers over the native core. Configs, segmentation results and
reports are exchanged as plain dicts; maps and samples as NumPy arrays.
"""

from __future__ import annotations

import json
from typing import Any, Mapping

import numpy as np

from . import _core
from ._core import (
    ConfigError,
    DataError,
    NlosidError,
    NumericalError,
    gev_cdf,
    gev_fit,
    gev_pdf,
    gev_quantile,
    render_report,
    time_kurtosis,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NlosidError",
    "NumericalError",
    "cluster_mask",
    "gev_cdf",
    "gev_fit",
    "gev_pdf",
    "gev_quantile",
    "render_report",
    "run_experiment",
    "segment",
    "simulate",
    "time_kurtosis",
]


def _dumps(obj: Mapping[str, Any] | None) -> str:
    return "" if obj is None else json.dumps(dict(obj))


def segment(
    power: np.ndarray,
    grid: Mapping[str, Any],
    params: Mapping[str, Any] | None = None,
    hpbw_deg: float = 5.0,
) -> list[dict[str, Any]]:
    """Segment an (n_el, n_az) linear power map into clusters.

    Without ``params`` the defaults follow the grid step and ``hpbw_deg``.
    """
    return json.loads(_core.segment_json(power, _dumps(grid), _dumps(params), hpbw_deg))


def cluster_mask(cluster: Mapping[str, Any], shape: tuple[int, int]) -> np.ndarray:
    """Boolean (n_el, n_az) mask decoded from a cluster's run-length pixels."""
    mask = np.zeros(shape, dtype=bool)
    for el, az, length in cluster["pixels_rle"]:
        mask[el, az : az + length] = True
    return mask


def simulate(config: Mapping[str, Any] | None = None, index: int = 0) -> tuple[np.ndarray, dict]:
    """Render one realization; returns its PAS map and a metadata dict.

    The metadata holds the grid, ground truth, labeled clusters and the
    extracted feature rows.
    """
    power, meta = _core.simulate_json(_dumps(config or {}), index)
    return power, json.loads(meta)


def run_experiment(config: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """Run the full protocol; returns ``{"report": ..., "features": [...]}``."""
    return json.loads(_core.run_experiment_json(_dumps(config or {})))
