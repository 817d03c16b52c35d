from fractions import Fraction

import pytest

from eventcascade.config import DetectorConfig
from eventcascade.runner import verify
from eventcascade.timestretch import TimeStretchFilter, detect_time_stretch, merge_runs, mg_trim, dict_run
from eventcascade.workload import StreamSpec, generate, oracle_events


def cfg(**kw):
    base = dict(n=100_000, m=8, t=50, mode="time_stretch", q=2)
    base.update(kw)
    return DetectorConfig(**base)


def test_bins_from_alpha():
    assert cfg(q=None, alpha="1").bins == 2
    assert cfg(q=None, alpha="1/2").bins == 3
    assert cfg(q=None, alpha="1/4").bins == 5
    assert cfg(q=5).alpha_eff == Fraction(1, 4)


def test_flush_on_full_first_bin():
    f = TimeStretchFilter(cfg())
    assert f.bin0 == 4
    for k in (1, 2, 3):
        f.insert(k)
        assert f.shift_times[0] == []
    f.insert(4)
    assert f.shift_times[0] == [4]


def test_first_flush_lands_in_level_one():
    f = TimeStretchFilter(cfg())
    for k in range(1, 9):
        f.insert(k)
    # two shifts of level 0: the first moved an empty bin, the second moved keys 1..4
    assert f.shift_times[1] == [8]
    assert f.L > 3
    assert f.bins[2][0][0].size == 0
    assert sorted(f.bins[1][0][0].tolist()) == []
    assert sorted(f.bins[1][1][0].tolist()) == [1, 2, 3, 4]


def test_schedule_is_periodic():
    f = TimeStretchFilter(cfg(m=12, q=3))
    for x in range(1, 2001):
        f.insert(x % 97)
    for i in range(0, 4):
        period = f.bin0 * f.r**i
        assert f.shift_times[i] == list(range(period, 2001, period))


def test_merge_and_trim():
    a = dict_run({5: 2, 1: 1})
    b = dict_run({5: 1, 9: 4})
    k, c = merge_runs(a, b)
    assert k.tolist() == [1, 5, 9] and c.tolist() == [1, 3, 4]
    k, c = mg_trim((k, c), 2)
    assert len(k) <= 2
    assert dict(zip(k.tolist(), c.tolist())) == {5: 2, 9: 3}


def test_no_pending_events_finalize_empty():
    f = TimeStretchFilter(cfg())
    f.insert(1)
    assert f.finalize() == []


def test_late_event_reported_at_end():
    # trigger happens right at the end; the deadline is past N
    stream = list(range(1000, 1100)) + [7] * 50
    c = cfg(n=len(stream), m=16, t=50)
    reports, f = detect_time_stretch(stream, c)
    assert [(r.key, r.report_time) for r in reports] == [(7, 150)]


def test_burst_across_levels_meets_deadline():
    spec = StreamSpec(n=20000, distribution="power_law", theta=2.0, order="adversarial_burst", seed=5)
    s = generate(spec).tolist()
    c = cfg(n=len(s), m=64, t=40, q=2)
    reports, _ = detect_time_stretch(s, c)
    truth = oracle_events(s, 40, c.alpha_eff)
    assert truth.events
    assert verify(reports, truth.events, "time_stretch", len(s)).ok


@pytest.mark.parametrize("q", [2, 3, 5])
def test_random_streams_match_oracle(q):
    s = generate(StreamSpec(n=30000, distribution="power_law", theta=2.0, seed=q)).tolist()
    c = cfg(n=len(s), m=120, t=50, q=q)
    reports, _ = detect_time_stretch(s, c)
    truth = oracle_events(s, 50, c.alpha_eff)
    v = verify(reports, truth.events, "time_stretch", len(s))
    assert v.ok, v.lines()


def test_non_integer_r_rejected():
    from eventcascade.config import ConfigError

    with pytest.raises(ConfigError):
        TimeStretchFilter(cfg(r=1.5))
