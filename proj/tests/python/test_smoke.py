# Copyright 2026 The FlexiNet Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import os
import subprocess

import numpy as np
import pytest

import flexinet


def test_reference_counts():
    assert "sm-a" in flexinet.reference_configs()
    params, macs = flexinet.count_params_macs("sm-a")
    assert params == 12915
    assert macs == 2746416
    with pytest.raises(flexinet.ConfigError):
        flexinet.count_params_macs("sm-z")


def test_log_mel_shape_and_floor():
    clip = flexinet.synthesize_clip(2, "b", seed=3)
    assert clip.dtype == np.float32
    feats = flexinet.log_mel(clip)
    assert feats.shape == (1, 1, 256, 64)
    assert np.isfinite(feats).all()
    assert feats.min() >= np.log(1e-5) - 1e-4


def test_clip_energy_matches_numpy():
    clip = flexinet.synthesize_clip(0, "a", seed=1)
    assert flexinet.clip_energy(clip) == pytest.approx(np.sum(clip.astype(np.float64) ** 2), rel=1e-12)


def test_uniform_fusion_is_mean():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(3, 10))
    fused = flexinet.fuse(logits, [1 / 3] * 3, [0.0] * 10)
    np.testing.assert_allclose(fused, logits.mean(axis=0), rtol=1e-12, atol=1e-12)


def test_fit_fusion_prefers_informative_teacher():
    rng = np.random.default_rng(1)
    labels = np.arange(200) % 10
    onehot = np.eye(10)[labels]
    logits = np.stack([3 * onehot + rng.normal(size=(200, 10)), rng.normal(size=(200, 10))], axis=1)
    fit = flexinet.fit_fusion(logits, labels.tolist())
    assert fit["cross_entropy"] <= fit["uniform_cross_entropy"]
    assert fit["alpha"][0] > fit["alpha"][1]


def test_quantize_roundtrip_bound():
    x = np.random.default_rng(2).uniform(-3, 5, size=10000).astype(np.float32)
    deq, scale, zp = flexinet.quantize_roundtrip(x, -3.0, 5.0)
    assert -128 <= zp <= 127
    assert np.max(np.abs(deq.astype(np.float64) - x)) <= scale / 2 + 1e-6


@pytest.mark.skipif(not os.environ.get("FLEXINET_CLI"), reason="CLI path not provided")
def test_cli_trained_model_loads(tmp_path):
    out = tmp_path / "train"
    subprocess.run(
        [os.environ["FLEXINET_CLI"], "train", "--set",
         "data.synthetic.train_clips_per_cell=1", "data.synthetic.test_clips_per_cell=1",
         "data.synthetic.unused_clips_per_cell=0", "train.epochs=1", "train.batch_size=16",
         "--out", str(out)],
        check=True, capture_output=True)
    model = flexinet.Model(str(out / "model.flxn"))
    assert model.kind == "float"
    x = flexinet.log_mel(flexinet.synthesize_clip(4, "c", seed=9))
    logits = model.logits(x)
    assert logits.shape == (1, 10)
    assert list(model.predict(x)) == [int(np.argmax(logits))]
    with pytest.raises(flexinet.FormatError):
        flexinet.Model(str(tmp_path / "missing.flxn"))
