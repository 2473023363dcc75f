import math

import numpy as np
import pytest
from scipy import stats

from feedersim.demand import (
    DemandSpec,
    generate_inbound,
    generate_outbound,
    intensity_at,
    load_trace,
    merge_streams,
    save_trace,
    total_rate,
)

REGION = (5.0, 5.0)
BASE = DemandSpec(lambda_ob=7.2, lambda_ib=0.8, horizon_h=2.5)


def test_intensity_uniform():
    spec = DemandSpec(7.2, 0.8)
    for loc in [(0, 0), (2.5, 4.0), (5, 5)]:
        assert intensity_at(spec, loc, "OB") == pytest.approx(7.2)


def test_intensity_decay():
    spec = DemandSpec(7.2, 0.8, mu_ob=0.1)
    assert intensity_at(spec, (5.0, 1.0), "OB") == pytest.approx(7.2 * math.exp(-0.5))
    ratio = intensity_at(spec, (0.0, 2.0), "OB") / intensity_at(spec, (10.0, 2.0), "OB")
    assert ratio == pytest.approx(math.e)


def test_total_rate_baseline():
    assert total_rate(BASE, REGION, "OB") == pytest.approx(180.0)
    assert total_rate(BASE, REGION, "IB") == pytest.approx(20.0)


def test_outbound_poisson_mean():
    # Poisson mean = rate * horizon = 180 * 2.5 = 450; check the mean count
    # over 50 seeds against a 3-sigma band for the mean.
    counts = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        counts.append(len(generate_outbound(BASE, REGION, rng)))
    mean = np.mean(counts)
    se = math.sqrt(450.0 / 50)
    assert abs(mean - 450.0) < 3 * se


def test_inbound_poisson_mean():
    counts = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        counts.append(len(generate_inbound(BASE, REGION, rng)))
    assert abs(np.mean(counts) - 50.0) < 3 * math.sqrt(50.0 / 50)


def test_zero_rate_empty():
    spec = DemandSpec(0.0, 0.0)
    rng = np.random.default_rng(1)
    assert generate_outbound(spec, REGION, rng) == []
    assert generate_inbound(spec, REGION, rng) == []


def test_same_seed_identical_streams():
    for gen in (generate_outbound, generate_inbound):
        a = gen(BASE, REGION, np.random.default_rng(42))
        b = gen(BASE, REGION, np.random.default_rng(42))
        assert a == b


def test_streams_sorted_ids_increasing():
    events = generate_outbound(BASE, REGION, np.random.default_rng(3))
    ts = [e.t for e in events]
    assert ts == sorted(ts)
    assert [e.id for e in events] == list(range(len(events)))
    assert all(0 <= e.x <= 5 and 0 <= e.y <= 5 for e in events)


def test_decay_shifts_mass_toward_freeway():
    decayed = generate_outbound(
        DemandSpec(7.2, 0.8, mu_ob=0.1, horizon_h=60.0), REGION, np.random.default_rng(5)
    )
    uniform = generate_outbound(
        DemandSpec(7.2, 0.8, horizon_h=60.0), REGION, np.random.default_rng(5)
    )
    assert len(decayed) > 8_000
    assert np.mean([e.x for e in decayed]) < np.mean([e.x for e in uniform])


def test_counts_pass_poisson_gof():
    # chi-square goodness of fit of per-replication counts at alpha = 0.01
    counts = []
    spec = DemandSpec(4.0, 0.0, horizon_h=1.0)  # mean 100 per run
    for seed in range(100):
        counts.append(len(generate_outbound(spec, REGION, np.random.default_rng(seed))))
    mean = 100.0
    edges = stats.poisson.ppf([0.0, 0.2, 0.4, 0.6, 0.8, 1.0], mean)
    edges[0], edges[-1] = -1, math.inf
    observed, _ = np.histogram(counts, bins=edges)
    probs = np.diff(stats.poisson.cdf(edges, mean))
    chi2, p = stats.chisquare(observed, probs * len(counts))
    assert p > 0.01


def test_spatial_marginal_matches_decay_ks():
    mu, w = 0.1, REGION[0]
    spec = DemandSpec(7.2, 0.8, mu_ob=mu, horizon_h=720.0)
    xs = np.array([e.x for e in generate_outbound(spec, REGION, np.random.default_rng(11))])
    assert len(xs) > 100_000

    def cdf(x):
        return (1.0 - np.exp(-mu * x)) / (1.0 - math.exp(-mu * w))

    stat, p = stats.kstest(xs, cdf)
    assert p > 0.01


def test_merge_streams_global_ordering():
    ob = generate_outbound(BASE, REGION, np.random.default_rng(8))
    ib = generate_inbound(BASE, REGION, np.random.default_rng(9))
    merged = merge_streams(ob, ib)
    assert [e.id for e in merged] == list(range(len(ob) + len(ib)))
    ts = [e.t for e in merged]
    assert ts == sorted(ts)


def test_trace_round_trip(tmp_path):
    events = merge_streams(
        generate_outbound(BASE, REGION, np.random.default_rng(2)),
        generate_inbound(BASE, REGION, np.random.default_rng(3)),
    )
    path = tmp_path / "trace.csv"
    save_trace(events, str(path))
    assert load_trace(str(path)) == events
