import math
import random

import pytest

from _oracles import ExactWindow
from ehstream.windowing import ResolutionConfig, StreamRecord, Summarizer


def test_config_validation():
    with pytest.raises(ValueError):
        ResolutionConfig(())
    with pytest.raises(ValueError):
        ResolutionConfig((0, 10))
    with pytest.raises(ValueError):
        ResolutionConfig((10, 10))
    with pytest.raises(ValueError):
        ResolutionConfig((50, 10))
    with pytest.raises(ValueError):
        ResolutionConfig((10,), stats=())
    with pytest.raises(ValueError):
        ResolutionConfig((10,), stats=("median",))
    with pytest.raises(ValueError):
        ResolutionConfig((10,), eps=1.0)


def test_stats_order_is_canonical():
    cfg = ResolutionConfig((10,), stats=("variance", "mean"))
    assert cfg.stats == ("mean", "variance")


def test_feature_names_and_width():
    cfg = ResolutionConfig((10, 50), stats=("mean", "variance"), include_raw=True)
    s = Summarizer(2, cfg)
    assert s.output_width == 2 + 2 * 2 * 2
    assert s.feature_names() == [
        "a0",
        "a1",
        "a0_w10_mean",
        "a0_w10_var",
        "a0_w50_mean",
        "a0_w50_var",
        "a1_w10_mean",
        "a1_w10_var",
        "a1_w50_mean",
        "a1_w50_var",
    ]
    out = s.push(StreamRecord(0, (1.0, 2.0), "x"))
    assert len(out.features) == s.output_width
    assert out.label == "x"
    assert out.t == 0


def test_no_raw_variant():
    cfg = ResolutionConfig((5,), stats=("mean",), include_raw=False)
    s = Summarizer(3, cfg)
    assert s.output_width == 3
    assert s.feature_names() == ["a0_w5_mean", "a1_w5_mean", "a2_w5_mean"]


def test_push_validation():
    s = Summarizer(2, ResolutionConfig((5,)))
    with pytest.raises(ValueError):
        s.push(StreamRecord(0, (1.0,)))
    with pytest.raises(ValueError):
        s.push(StreamRecord(0, (1.0, float("nan"))))


def test_warmup_and_tracking_against_oracle():
    cfg = ResolutionConfig((8,), stats=("mean", "variance"), eps=0.1, include_raw=True)
    s = Summarizer(1, cfg)
    oracle = ExactWindow(8)
    rng = random.Random(0)
    for t in range(400):
        x = rng.uniform(0, 4)
        oracle.add(x)
        out = s.push(StreamRecord(t, (x,)))
        raw, mean, var = out.features
        assert raw == x
        # before the window fills, stats cover only what has arrived
        assert abs(mean - oracle.mean) <= 0.1 * abs(oracle.mean) + 1e-9
        assert abs(var - oracle.variance) <= 0.1 * oracle.variance + 1e-9


def test_attributes_do_not_leak_across_sketches():
    cfg = ResolutionConfig((4,), stats=("mean",), include_raw=False)
    s = Summarizer(2, cfg)
    for t in range(40):
        out = s.push(StreamRecord(t, (1.0, 100.0)))
    m0, m1 = out.features
    assert abs(m0 - 1.0) < 1e-12
    assert abs(m1 - 100.0) < 1e-12


def test_sketch_accessor_and_reset():
    cfg = ResolutionConfig((4, 16), eps=0.2)
    s = Summarizer(1, cfg)
    for t in range(20):
        s.push(StreamRecord(t, (float(t),)))
    assert s.sketch(0, 16).now == 19
    assert s.sketch(0, 4).window == 4
    s.reset()
    assert s.sketch(0, 16).now == -1
