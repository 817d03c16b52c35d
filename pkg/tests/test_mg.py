import random
from collections import Counter

from hypothesis import given, settings
from hypothesis import strategies as st

from eventcascade.mg import MGTable, misra_gries


def test_smallest_decrement_empties_table():
    t = MGTable(2)
    assert t.insert("a") == []
    assert t.insert("b") == []
    batch = t.insert("c")
    assert len(t) == 0
    assert sorted(k for k, _ in batch) == ["a", "b", "c"]
    assert batch[-1][0] == "c"


def test_no_eviction_path():
    t = MGTable(2)
    for k in "aab":
        assert t.insert(k) == []
    assert dict(t.items()) == {"a": 2, "b": 1}


def test_estimates():
    t = MGTable(2)
    assert t.estimate("x") == 0
    t.insert("a")
    t.insert("a")
    assert t.estimate("a") == 2
    t2 = MGTable(2)
    for k in "abc":
        t2.insert(k)
    assert t2.estimate("a") == 0


def test_uniform_small_stream_bound():
    rng = random.Random(3)
    stream = [rng.randrange(10) for _ in range(100)]
    t = MGTable(4)
    for x in stream:
        t.insert(x)
    for k, f in Counter(stream).items():
        assert t.estimate(k) <= f < t.estimate(k) + 100 / 5


def test_pinned_entries_are_exempt():
    t = MGTable(2)
    t.insert("a")
    t.entries["a"].pinned = True
    t.insert("b")
    batch = t.insert("c")
    assert [k for k, _ in batch] == ["b", "c"]
    assert t.estimate("a") == 1


def test_reported_bit_travels_with_units():
    t = MGTable(1)
    t.insert("a", reported=True)
    assert t.insert("b") == [("a", True), ("b", False)]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 30), max_size=300), st.integers(1, 12))
def test_underestimate_with_bounded_error(stream, cap):
    t = MGTable(cap)
    for x in stream:
        t.insert(x)
    n = len(stream)
    for k, f in Counter(stream).items():
        est = t.estimate(k)
        assert est <= f
        assert f - est <= n / (cap + 1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 20), max_size=200), st.integers(1, 8))
def test_units_are_conserved(stream, cap):
    t = MGTable(cap)
    out = 0
    for x in stream:
        out += len(t.insert(x))
    assert t.total() + out == len(stream)
    assert len(t) <= cap


def test_misra_gries_counters():
    t = misra_gries([1, 2, 3], 1 / 64)
    assert t.capacity == 64
    assert dict(t.items()) == {1: 1, 2: 1, 3: 1}
