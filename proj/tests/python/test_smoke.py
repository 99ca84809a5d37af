import json
import math

import numpy as np
import pytest

import rawatt


def test_kernel_taps():
    w = rawatt.make_kernel(0.25, 5)
    np.testing.assert_allclose(w, [-math.exp(-0.125), 0.0, 1.0, 0.0, -math.exp(-0.125)], atol=1e-12)
    with pytest.raises(ValueError):
        rawatt.make_kernel(0.6, 5)


def test_filterbank_matches_numpy_convolution():
    rng = np.random.default_rng(0)
    frames = rng.normal(size=(64, 5))
    mu = np.array([0.05, 0.2, 0.4])
    x = rawatt.filterbank_forward(frames, mu, 17)
    assert x.shape == (3, 5)
    n = np.arange(17) - 8
    for i, m in enumerate(mu):
        kern = np.cos(2 * np.pi * m * n) * np.exp(-(n * m) ** 2 / 2)
        for j in range(5):
            out = np.convolve(frames[:, j], kern, mode="valid")
            assert x[i, j] == pytest.approx(np.log(np.mean(out**2) + 1e-10), rel=1e-12)


def test_attention_chain():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(4, 7))
    w1, b1 = rng.normal(size=(6, 28)), rng.normal(size=6)
    w2, b2 = rng.normal(size=(4, 6)), rng.normal(size=4)
    w = rawatt.nin_forward(x, w1, b1, w2, b2)
    assert w.sum() == pytest.approx(1.0)
    y = rawatt.apply_attention(x, w)
    np.testing.assert_allclose(y, w[:, None] * x)
    z = rawatt.prune_center(rawatt.soft_attention_norm(y, 0.01), 3)
    assert z.shape == (4, 3)


def test_cross_entropy_and_gradcheck():
    loss, grad = rawatt.cross_entropy(np.array([1.0, 2.0, 3.0]), 2)
    assert loss == pytest.approx(0.40760596, abs=1e-8)
    assert grad.sum() == pytest.approx(0.0, abs=1e-15)
    blocks = rawatt.gradcheck(seed=3)
    assert [b[0] for b in blocks] == ["kernel", "filterbank", "attention", "head", "pipeline"]
    assert all(b[2] for b in blocks)
    assert not dict((b[0], b[2]) for b in rawatt.gradcheck(corrupt="head"))["head"]


def test_train_eval_extract(tmp_path):
    assert rawatt.synth(tmp_path / "data", per_class=5, seed=1) == 40
    cfg = {"f": 6, "k": 17, "s": 64, "t": 7, "t_keep": 3, "shift": 32, "h": 8,
           "head_widths": [8], "epochs": 2}
    seen = []
    net, epochs = rawatt.train(tmp_path / "data" / "manifest.jsonl", json.dumps(cfg), seen.append)
    assert len(epochs) == 2 and len(seen) == 2
    assert json.loads(net.config)["f"] == 6
    result = rawatt.evaluate(net, tmp_path / "data" / "manifest.jsonl", "val")
    assert result["utterances"] == 8

    net.save(tmp_path / "m.wfck")
    back = rawatt.Network.load(tmp_path / "m.wfck")
    np.testing.assert_array_equal(back.mu, net.mu)

    samples, sr = rawatt.load_wav(tmp_path / "data" / "wav" / "c0_0000.wav")
    assert sr == 16000
    z = back.extract(samples, "z")
    assert z.shape[0] == 6
    rows = rawatt.analyze_filters(back)
    assert [r[1] for r in rows] == sorted(r[1] for r in rows)
    prof = rawatt.analyze_attention(back, samples)
    assert np.linalg.norm(prof["attention_norm"]) == pytest.approx(1.0)
