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

import math
import os
import subprocess

import numpy as np
import pytest

import nlosid


def test_gev_matches_closed_form():
    x = np.array([-1.0, 0.0, 0.5, 2.0])
    gamma, mu, sigma = 0.2, 0.1, 1.3
    t = 1.0 + gamma * (x - mu) / sigma
    cdf = np.exp(-t ** (-1.0 / gamma))
    pdf = t ** (-1.0 / gamma - 1.0) * cdf / sigma
    np.testing.assert_allclose(nlosid.gev_cdf(x, gamma, mu, sigma), cdf, rtol=1e-12)
    np.testing.assert_allclose(nlosid.gev_pdf(x, gamma, mu, sigma), pdf, rtol=1e-12)
    q = nlosid.gev_quantile(0.3, gamma, mu, sigma)
    assert nlosid.gev_cdf(np.array([q]), gamma, mu, sigma)[0] == pytest.approx(0.3, abs=1e-12)


def test_gev_fit_recovers_gumbel_sample():
    rng = np.random.default_rng(3)
    u = rng.uniform(size=4000)
    samples = 2.0 - 0.5 * np.log(-np.log(u))
    fit = nlosid.gev_fit(samples)
    assert abs(fit["gamma"]) < 0.05
    assert fit["mu"] == pytest.approx(2.0, abs=0.05)
    assert fit["sigma"] == pytest.approx(0.5, abs=0.03)


def test_gev_fit_rejects_tiny_samples():
    with pytest.raises(nlosid.NumericalError):
        nlosid.gev_fit(np.arange(5.0))


def test_time_kurtosis_two_taps():
    taps = np.zeros(8, dtype=complex)
    taps[0] = taps[4] = 1.0
    assert nlosid.time_kurtosis(taps) == pytest.approx(7.0 / 3.0, rel=1e-12)


def test_segment_separates_two_blobs():
    grid = {"az_start": -180.0, "az_step": 5.0, "n_az": 73, "el_start": -45.0, "el_step": 5.0, "n_el": 28}
    el, az = np.meshgrid(np.arange(28), np.arange(73), indexing="ij")
    power = np.ones((28, 73))
    for i, j in [(10, 20), (18, 50)]:
        power += 300.0 * np.exp(-((el - i) ** 2 + (az - j) ** 2) / (2 * 0.5**2))
    clusters = nlosid.segment(power, grid)
    assert len(clusters) == 2
    peaks = sorted(tuple(c["peak"]) for c in clusters)
    assert peaks == [(10, 20), (18, 50)]
    masks = [nlosid.cluster_mask(c, power.shape) for c in clusters]
    assert not np.any(masks[0] & masks[1])


def test_segment_shape_mismatch_is_data_error():
    grid = {"az_start": 0.0, "az_step": 5.0, "n_az": 10, "el_start": 0.0, "el_step": 5.0, "n_el": 4}
    with pytest.raises(nlosid.DataError):
        nlosid.segment(np.ones((3, 10)), grid)


def test_bad_config_is_config_error():
    with pytest.raises(nlosid.ConfigError):
        nlosid.simulate({"sim": {"step_deg": -1.0}})
    assert issubclass(nlosid.ConfigError, nlosid.NlosidError)


def test_simulate_is_deterministic():
    cfg = {"seed": 9}
    a, meta_a = nlosid.simulate(cfg, 2)
    b, meta_b = nlosid.simulate(cfg, 2)
    np.testing.assert_array_equal(a, b)
    assert meta_a == meta_b
    assert a.shape == (meta_a["grid"]["n_el"], meta_a["grid"]["n_az"])
    assert meta_a["truth"]["los_present"]
    labels = {row["label"] for row in meta_a["features"]}
    assert "LOS" in labels


def test_small_experiment_report():
    cfg = {"n_realizations": 30, "n_train": 20, "n_test": 10, "min_class_samples": 5,
           "ann": {"max_epochs": 200}, "seed": 77}
    out = nlosid.run_experiment(cfg)
    report = out["report"]
    assert report["seed"] == 77
    assert out["features"]
    assert all(math.isfinite(row["r_p"]) for row in out["features"])
    assert "MLR" in nlosid.render_report(__import__("json").dumps(report))


@pytest.mark.skipif("NLOSID_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_help():
    result = subprocess.run([os.environ["NLOSID_CLI"], "--help"], capture_output=True, text=True)
    assert result.returncode == 0
    assert "experiment" in result.stdout
