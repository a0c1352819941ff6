import math
import random
import statistics

import pytest

from _oracles import ExactWindow
from ehstream.sketches import VarianceEH, memory_footprint, merge_stats, _unmerge_stats


def agg_of(values):
    n = len(values)
    m = statistics.fmean(values)
    v = sum((x - m) ** 2 for x in values)
    return n, m, v


def test_merge_formula_matches_two_pass_stats():
    rng = random.Random(2)
    for _ in range(200):
        a = [rng.gauss(3, 2) for _ in range(rng.randrange(1, 30))]
        b = [rng.gauss(-1, 5) for _ in range(rng.randrange(1, 30))]
        n, m, v = merge_stats(*agg_of(a), *agg_of(b))
        en, em, ev = agg_of(a + b)
        assert n == en
        assert abs(m - em) < 1e-10
        assert abs(v - ev) < 1e-8


def test_unmerge_inverts_merge():
    rng = random.Random(3)
    for _ in range(200):
        a = agg_of([rng.uniform(-5, 5) for _ in range(rng.randrange(1, 20))])
        b = agg_of([rng.uniform(-5, 5) for _ in range(rng.randrange(1, 20))])
        total = merge_stats(*a, *b)
        back = _unmerge_stats(*total, *a)
        assert abs(back[0] - b[0]) < 1e-12
        assert abs(back[1] - b[1]) < 1e-9
        assert abs(back[2] - b[2]) < 1e-7


def test_constructor_and_input_validation():
    with pytest.raises(ValueError):
        VarianceEH(0.0, 10)
    with pytest.raises(ValueError):
        VarianceEH(1.0, 10)
    with pytest.raises(ValueError):
        VarianceEH(0.1, 0)
    eh = VarianceEH(0.1, 10)
    with pytest.raises(ValueError):
        eh.add(float("nan"))
    with pytest.raises(ValueError):
        eh.add(float("inf"))


def test_empty_and_single_element():
    eh = VarianceEH(0.1, 8)
    est = eh.estimate()
    assert (est.count, est.sum, est.mean, est.variance) == (0.0, 0.0, 0.0, 0.0)
    eh.add(42.5)
    est = eh.estimate()
    assert est.count == 1.0
    assert est.mean == 42.5
    assert est.variance == 0.0


def test_constant_stream_variance_zero_and_tiny_state():
    eh = VarianceEH(0.05, 100)
    for _ in range(500):
        eh.add(3.25)
        assert eh.estimate().variance == 0.0
    # identical values merge freely: each sweep collapses the window to one
    # bucket, and between sweeps at most ~2*base+16 singletons pile up
    assert eh.bucket_count() <= 32
    assert abs(eh.estimate().mean - 3.25) < 1e-12


def test_alternating_pair_window_two_is_exact():
    eh = VarianceEH(0.2, 2)
    vals = [0.0, 1.0] * 50
    for t, x in enumerate(vals):
        eh.add(x)
        if t >= 1:
            est = eh.estimate()
            # the oldest singleton is fully live, so no approximation at all
            assert abs(est.variance - 0.25) <= 0.2 * 0.25
            assert abs(est.variance - 0.25) < 1e-12
            assert est.count == 2.0


def test_pseudo_bucket_at_half_straddle():
    # state injected directly: window 4 at now=5, so the oldest bucket
    # (positions 0..3) has exactly 2 of its 4 elements live
    eh = VarianceEH(0.3, 4)
    eh._now = 5
    eh._buckets = [[3, 4.0, 2.0, 1.0], [5, 2.0, 5.0, 0.0]]
    eh._recompute_total()
    est = eh.estimate()
    assert est.count == 4.0
    assert abs(est.mean - 3.5) < 1e-12
    assert abs(est.variance - 9.5 / 4.0) < 1e-12


def test_strict_expiry_and_window_one():
    eh = VarianceEH(0.4, 1)
    for x in (5.0, -2.0, 7.5):
        eh.add(x)
        est = eh.estimate()
        assert est.count == 1.0
        assert est.mean == x
        assert est.variance == 0.0
        assert eh.bucket_count() == 1


def test_structural_invariant_after_every_add():
    rng = random.Random(8)
    eh = VarianceEH(0.3, 64)
    for t in range(2000):
        eh.add(rng.gauss(0, 1))
        eh.check_invariant()
        for b in eh.buckets():
            assert b.last_ts > eh.now - eh.window


@pytest.mark.parametrize(
    "gen",
    [
        lambda rng, t: rng.gauss(0.0, 1.0),
        lambda rng, t: rng.uniform(0.0, 1.0),
        lambda rng, t: 10.0 * math.sin(2 * math.pi * t / 100.0) + rng.gauss(0, 0.5),
    ],
    ids=["gaussian", "uniform", "sine"],
)
@pytest.mark.parametrize("eps,window", [(0.1, 32), (0.1, 100), (0.05, 100)])
def test_relative_error_contract(gen, eps, window):
    rng = random.Random(13)
    eh = VarianceEH(eps, window)
    oracle = ExactWindow(window)
    for t in range(5000):
        x = gen(rng, t)
        eh.add(x)
        oracle.add(x)
        if t >= window:
            true = oracle.variance
            got = eh.estimate().variance
            assert abs(got - true) <= eps * true + 1e-9, f"t={t}: {got} vs {true}"


def test_gaussian_seed11_long_run():
    rng = random.Random(11)
    eps, window = 0.05, 1000
    eh = VarianceEH(eps, window)
    oracle = ExactWindow(window)
    for t in range(10000):
        x = rng.gauss(0.0, 1.0)
        eh.add(x)
        oracle.add(x)
        if t >= window:
            true = oracle.variance
            assert abs(eh.estimate().variance - true) <= eps * true + 1e-9


def test_running_total_resists_drift():
    rng = random.Random(6)
    eh = VarianceEH(0.5, 500)
    for _ in range(20000):
        eh.add(rng.gauss(100.0, 0.1))  # large mean stresses cancellation
    cached = (eh._tn, eh._tm, eh._tv)
    eh._recompute_total()
    assert abs(cached[0] - eh._tn) < 1e-9
    assert abs(cached[1] - eh._tm) <= 1e-9 * abs(eh._tm)
    assert abs(cached[2] - eh._tv) <= 1e-6 * max(abs(eh._tv), 1.0)


def test_memory_bound_and_compression():
    rng = random.Random(5)
    eps = 0.5
    counts = []
    for window in (100, 1000, 10000):
        eh = VarianceEH(eps, window)
        for _ in range(2 * window):
            eh.add(rng.gauss(0, 1))
        n_buckets, n_bytes = memory_footprint(eh)
        assert n_buckets <= 16 * (1.0 / eps**2) * math.log2(window)
        assert n_bytes == 40 * n_buckets
        counts.append(n_buckets)
    # in the compressing regime growth tracks log W, far from linear
    assert counts[2] <= 3 * counts[0] * (math.log2(10000) / math.log2(100))
    assert counts[2] <= 0.1 * 10000


def test_determinism():
    def run():
        rng = random.Random(17)
        eh = VarianceEH(0.1, 50)
        for _ in range(2000):
            eh.add(rng.gauss(2, 3))
        return eh.buckets(), eh.estimate()

    assert run() == run()
