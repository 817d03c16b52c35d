import random
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from eventcascade.cascade import Cascade, detect_online
from eventcascade.config import ConfigError, DetectorConfig
from eventcascade.emio import REPORTED
from eventcascade.workload import StreamSpec, generate, oracle_events


def test_threshold_one_reports_every_first_occurrence():
    cfg = DetectorConfig(n=20, m=4, t=1, epsilon="exact")
    # trigger line (1/20 - 1/4) * 20 < 1, so the precondition gate rejects it
    with pytest.raises(ConfigError):
        cfg.validate()


def test_single_event_small_stream():
    cfg = DetectorConfig(n=16, m=4, r=2, phi=Fraction(1, 2), epsilon=Fraction(1, 16))
    assert cfg.threshold == 8
    others = list(range(100, 108))
    stream = []
    for o in others:
        stream += [1, o]
    reports, c = detect_online(stream, cfg)
    assert [r.key for r in reports] == [1]
    assert reports[0].report_time == 15
    assert reports[0].trigger_time == 15


def test_no_event_bounds_trigger_activations():
    rng = random.Random(4)
    n = 5000
    stream = [rng.randrange(400) for _ in range(n)]
    cfg = DetectorConfig(n=n, m=64, t=200, b=8)
    reports, c = detect_online(stream, cfg)
    assert reports == []
    assert c.crossings <= n / float(cfg.trigger_line)
    assert c.queries == c.crossings


def test_flush_empty_batch_is_free():
    c = Cascade(DetectorConfig(n=100, m=4, t=50))
    c.flush(0, [])
    assert c.io.total == 0


def test_third_key_pushes_units_into_level_one():
    c = Cascade(DetectorConfig(n=1000, m=2, r=2, t=500))
    for k in (1, 2, 3):
        c.insert(k)
    assert len(c.level0) == 0
    assert c.disk[0].capacity == 4
    assert c.estimates()[1] == {1: 1, 2: 1, 3: 1}


def _deep_cascade():
    c = Cascade(DetectorConfig(n=1000, m=4, t=500))
    assert c.L >= 4
    return c


def test_consolidate_level0_only():
    c = _deep_cascade()
    for _ in range(5):
        c.level0.insert(7)
    assert c.consolidate_query(7) == (5, False)


def test_consolidate_sums_levels():
    c = _deep_cascade()
    c.level0.insert(7)
    c.level0.insert(7)
    c.disk[0].rebuild({7: [3, 0]})
    c.disk[1].rebuild({7: [4, 0]})
    assert c.consolidate_query(7) == (9, False)


def test_consolidate_stops_at_reported_record():
    c = _deep_cascade()
    c.level0.insert(7)
    c.disk[0].rebuild({7: [3, 0]})
    c.disk[1].rebuild({7: [4, REPORTED]})
    c.disk[2].rebuild({7: [10, 0]})
    c.io.reset()
    total, rep = c.consolidate_query(7)
    assert rep is True
    assert total == 8
    assert c.io.reads["query"] == 2  # level 3 never touched


def test_finalize_empty_stream():
    c = Cascade(DetectorConfig(n=10, m=4, t=3))
    assert c.finalize_heavy_hitters() == []


def test_finalize_exact():
    cfg = DetectorConfig(n=5, m=4, t=3)
    reports, c = detect_online(list("aaabb"), cfg)
    assert [r.key for r in reports] == ["a"]
    assert [(k, n) for k, n, _ in c.finalize_heavy_hitters()] == [("a", 3)]


def test_finalize_approximate_band():
    n = 20000
    stream = generate(StreamSpec(n=n, distribution="power_law", theta=2.0, seed=11))
    cfg = DetectorConfig(n=n, m=256, phi=Fraction(1, 16), epsilon=Fraction(1, 64))
    _, c = detect_online(stream.tolist(), cfg)
    out = {k for k, _, _ in c.finalize_heavy_hitters()}
    counts = Counter(stream.tolist())
    lo = (Fraction(1, 16) - Fraction(1, 64)) * n
    for k, f in counts.items():
        if f >= n / 16:
            assert k in out
        if f <= lo:
            assert k not in out


@pytest.mark.parametrize("seed", range(3))
def test_matches_oracle_exact(seed):
    n = 20000
    stream = generate(StreamSpec(n=n, distribution="power_law", theta=2.0, seed=seed)).tolist()
    cfg = DetectorConfig(n=n, m=512, b=16, t=60)
    reports, _ = detect_online(stream, cfg)
    truth = oracle_events(stream, 60)
    assert sorted((r.key, r.report_time) for r in reports) == sorted(
        (e.key, e.trigger_time) for e in truth.events
    )


def test_file_backed_levels_match_memory(tmp_path):
    stream = generate(StreamSpec(n=3000, u=300, seed=2)).tolist()
    cfg = DetectorConfig(n=3000, m=64, b=4, t=100)
    a, ca = detect_online(stream, cfg)
    b, cb = detect_online(stream, cfg, directory=tmp_path)
    assert a == b
    assert ca.io.to_csv() == cb.io.to_csv()
    for lv in cb.disk:
        if lv.store is not None and len(lv):
            assert lv.store.read() == lv.to_bytes()


def test_prefix_estimator_bound_small():
    rng = np.random.default_rng(0)
    n = 2000
    stream = rng.integers(0, 300, n).tolist()
    cfg = DetectorConfig(n=n, m=8, r=2, t=n)
    c = Cascade(cfg)
    seen = Counter()
    for i, x in enumerate(stream, 1):
        c.insert(x)
        seen[x] += 1
        if i % 100:
            continue
        levels = c.estimates()
        for k, f in seen.items():
            acc = 0
            for j, lv in enumerate(levels):
                acc += lv.get(k, 0)
                assert acc <= f < acc + n / (2**j * 8)
