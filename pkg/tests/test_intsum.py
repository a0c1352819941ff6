import random

import pytest

from _oracles import CascadeIntSum, ExactWindow
from ehstream.sketches import IntSumEH, l_canonical


def all_decompositions(remaining, level, l):
    """Every multiplicity list with non-top counts in [l, l+1], top in [1, l+1]."""
    outs = []
    size = 1 << level
    if size > remaining:
        return outs
    if remaining % size == 0 and 1 <= remaining // size <= l + 1:
        outs.append([remaining // size])
    for c in (l, l + 1):
        rest = remaining - c * size
        if rest > 0:
            for sub in all_decompositions(rest, level + 1, l):
                outs.append([c] + sub)
    return outs


@pytest.mark.parametrize("l", [0, 1, 2, 3, 5])
def test_l_canonical_matches_brute_force(l):
    for total in range(1, 300):
        got = l_canonical(total, l)
        assert sum(c << j for j, c in enumerate(got)) == total
        top = got[-1]
        assert 1 <= top <= l + 1
        assert all(l <= c <= l + 1 for c in got[:-1])
        sols = all_decompositions(total, 0, l)
        assert len(sols) == 1, f"decomposition not unique: total={total} l={l}"
        assert got == sols[0]


def test_l_canonical_edges():
    assert l_canonical(0, 3) == []
    assert l_canonical(1, 0) == [1]
    assert l_canonical(1, 4) == [1]
    # l=0 degenerates to plain binary digits
    for total in (5, 12, 255):
        got = l_canonical(total, 0)
        assert got == [(total >> j) & 1 for j in range(total.bit_length())]


def test_constructor_and_add_validation():
    with pytest.raises(ValueError):
        IntSumEH(1.0, 10)
    with pytest.raises(ValueError):
        IntSumEH(0.5, 0)
    eh = IntSumEH(0.5, 10)
    with pytest.raises(ValueError):
        eh.add(-1)
    with pytest.raises(TypeError):
        eh.add(2.5)


def test_add_zero_only_advances_clock():
    eh = IntSumEH(0.5, 10)
    eh.add(5)
    before = eh.buckets()
    eh.add(0)
    assert eh.buckets() == before
    assert eh.now == 1


def test_small_sum_example():
    eh = IntSumEH(0.5, 10)
    for v in (5, 3, 2):
        eh.add(v)
    est = eh.estimate().sum
    assert abs(est - 10) <= 0.5 * 10


def test_eight_ones_bucket_shape_and_estimate():
    # l=1: canonical(8) has sizes [4,2,1,1]; midpoint rule gives 8 - 1.5
    eh = IntSumEH(0.5, 1 << 30)
    for _ in range(8):
        eh.add(1)
    assert [b.count for b in eh.buckets()] == [4, 2, 1, 1]
    assert eh.estimate().sum == 6.5


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_state_equivalence_with_cascading_reference(seed):
    # the acceptance suite runs the full 20k-step version; this is a fast probe
    rng = random.Random(seed)
    eps, window = 0.05, 200
    eh = IntSumEH(eps, window)
    ref = CascadeIntSum(eps, window)
    for t in range(6000):
        v = rng.randrange(0, 101)
        eh.add(v)
        ref.add(v)
        if t % 7 == 0:  # state check is O(buckets); sample it
            assert [(b.last_ts, b.count) for b in eh.buckets()] == ref.state()
        assert eh.estimate().sum == ref.estimate_sum()
        assert eh.total_ones == ref.total


def test_relative_error_against_exact_sum():
    rng = random.Random(9)
    eps, window = 0.1, 100
    eh = IntSumEH(eps, window)
    oracle = ExactWindow(window)
    for t in range(5000):
        v = rng.randrange(0, 50)
        eh.add(v)
        oracle.add(v)
        if t >= window:
            true = oracle.sum
            assert abs(eh.estimate().sum - true) <= eps * true + 1e-9


def test_canonical_invariant_after_every_add():
    rng = random.Random(4)
    eh = IntSumEH(0.2, 64)
    for _ in range(3000):
        eh.add(rng.randrange(0, 30))
        sizes = [b.count for b in eh.buckets()]
        assert sum(sizes) == eh.total_ones
        want = l_canonical(eh.total_ones, eh.l)
        want_sizes = [1 << j for j in range(len(want) - 1, -1, -1) for _ in range(want[j])]
        # expiry removes the top-size bucket, which keeps the form canonical
        assert sizes == want_sizes
        ts = [b.last_ts for b in eh.buckets()]
        assert ts == sorted(ts)
        assert all(t > eh.now - eh.window for t in ts)
