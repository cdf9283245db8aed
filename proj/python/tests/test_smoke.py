# Copyright 2026 The slujoint Authors.
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

import numpy as np
import pytest

import slujoint

TINY = [
    "epochs=1", "joint_epochs=1", "batch_size=4", "nbest_size=2", "beam_width=2",
    "max_decode_len=8", "asr.embed_dim=6", "asr.encoder_units=8", "asr.encoder_layers=1",
    "asr.pred_units=8", "asr.joint_units=8", "asr.decoder_units=8", "asr.attention_units=8",
    "nlu.model_dim=8", "nlu.layers=1", "nlu.ff_dim=12", "nlu.head_units=8",
    "data.corpus.utterance_count=10", "data.corpus.vocab_size=24", "data.corpus.feature_dim=6",
    "data.corpus.num_intents=3", "data.corpus.num_slot_types=2", "data.corpus.num_domains=2",
]


def test_version():
    assert slujoint.__version__ == "0.1.0"


def test_metrics():
    assert slujoint.wer(["a", "b", "c"], ["a", "c"]) == pytest.approx(1 / 3)
    ref = {"transcript": "play jazz", "slots": [("genre", "jazz")], "intent": "play"}
    assert slujoint.semer(ref, ref) == 0.0
    assert slujoint.slu_f1(ref, ref) == pytest.approx(1.0)
    assert slujoint.semer(ref, {"transcript": "play", "intent": "stop"}) > 0.0


def test_rnnt_loss_single_frame():
    # One frame, one label: emit the label then blank.
    lp = np.log(np.full((1, 2, 3), 1 / 3))
    assert slujoint.rnnt_loss(lp, [1]) == pytest.approx(2 * math.log(3))
    with pytest.raises(Exception):
        slujoint.rnnt_loss(np.zeros((2, 2)), [1])


def test_config_and_errors():
    cfg = slujoint.load_config("", ["epochs=3"])
    assert cfg["epochs"] == 3
    with pytest.raises(ValueError):
        slujoint.load_config("", ["asr.nope=1"])


def test_generate_corpus():
    utts = slujoint.generate_corpus({"utterance_count": 5, "feature_dim": 4})
    assert len(utts) == 5
    assert utts[0]["features"].shape[1] == 4
    assert utts[0]["transcript"]


def test_train_and_evaluate(tmp_path):
    out = str(tmp_path / "run")
    report = slujoint.train("", TINY + ["output_dir=" + out])
    assert "dev" in report
    metrics = slujoint.evaluate(out, split="dev")
    assert metrics == report["dev"]


def test_grad_check():
    reports = slujoint.grad_check(coords=2)
    assert len(reports) == 32
    assert all(r["passed"] for r in reports)
