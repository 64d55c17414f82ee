import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from referee.errors import ConfigError
from referee.metrics import (MatchOutcome, MetricsConfig, ape, build_outcomes, classify, f1_score,
                             pr_curve, precision_recall, recall_at_1, rotation_error)
from referee.se2 import Pose2

import oracles


def hit(qid, d):
    return MatchOutcome(qid, qid + 100, d, 1.0, True)


def miss(qid, d, positive=True):
    return MatchOutcome(qid, qid + 100, d, 50.0, positive)


def random_outcomes(rng, n):
    out = []
    for q in range(n):
        positive = rng.random() < 0.7
        if rng.random() < 0.1:
            out.append(MatchOutcome(q, None, math.inf, None, positive))
            continue
        close = positive and rng.random() < 0.7
        d = float(rng.integers(0, max(1, n // 2))) if rng.random() < 0.5 else float(rng.random() * n)
        out.append(MatchOutcome(q, q + 1000, d, 5.0 if close else 40.0, positive))
    if not any(o.has_true_revisit for o in out):
        out[0] = hit(0, 1.0)
    return out


def oracle_of(outcomes, radius=20.0):
    dists = [None if o.retrieved_id is None else o.descriptor_distance for o in outcomes]
    correct = [o.retrieved_id is not None and o.metric_distance_m <= radius for o in outcomes]
    positive = [o.has_true_revisit for o in outcomes]
    return oracles.pr_points(dists, correct, positive)


def test_classify_examples():
    perfect = [hit(k, 0.0) for k in range(5)]
    assert precision_recall(*classify(perfect, 1.0)) == (1.0, 1.0)
    assert precision_recall(*classify(perfect, 0.0)) == (1.0, 0.0)
    assert precision_recall(3, 1, 1) == (0.75, 0.75)
    mixed = [hit(0, 1), hit(1, 1), hit(2, 1), miss(3, 1), hit(4, 9)]
    assert classify(mixed, 5.0) == (3, 1, 1)


def test_pr_curve_perfect_separation():
    outs = [hit(k, float(k)) for k in range(5)] + [miss(10 + k, 10.0 + k, positive=False) for k in range(5)]
    c = pr_curve(outs)
    assert c.auc == pytest.approx(1.0) and c.f1_max == 1.0


def test_pr_curve_single_query():
    c = pr_curve([hit(0, 3.0)])
    assert any(p == 1.0 and r == 1.0 for p, r in zip(c.precision, c.recall))
    assert c.thresholds[0] == 3.0 and c.recall[0] == 0.0 and c.precision[0] == 1.0


def test_pr_curve_needs_positives():
    with pytest.raises(ValueError):
        pr_curve([miss(0, 1.0, positive=False)])


@given(st.integers(0, 10 ** 6), st.integers(1, 60))
def test_pr_curve_matches_enumeration(seed, n):
    outs = random_outcomes(np.random.default_rng(seed), n)
    ref = oracle_of(outs)
    c = pr_curve(outs)
    assert len(ref) == len(c.thresholds)
    for (tau, p, r), t2, p2, r2 in zip(ref, c.thresholds, c.precision, c.recall):
        assert tau == t2 and abs(p - p2) < 1e-9 and abs(r - r2) < 1e-9
    assert abs(c.auc - oracles.trapezoid_auc(ref)) < 1e-9


@given(st.integers(0, 10 ** 6))
def test_auc_rank_invariant(seed):
    outs = random_outcomes(np.random.default_rng(seed), 40)
    warped = [MatchOutcome(o.query_id, o.retrieved_id, math.exp(o.descriptor_distance / 7) * 3 + 1,
                           o.metric_distance_m, o.has_true_revisit) if o.retrieved_id is not None else o
              for o in outs]
    assert abs(pr_curve(outs).auc - pr_curve(warped).auc) < 1e-12


@given(st.integers(0, 10 ** 6), st.floats(0, 50))
def test_classify_count_identities(seed, tau):
    outs = random_outcomes(np.random.default_rng(seed), 30)
    tp, fp, fn = classify(outs, tau)
    accepted = sum(o.retrieved_id is not None and o.descriptor_distance < tau for o in outs)
    assert tp + fp == accepted
    assert tp + fn <= sum(o.has_true_revisit for o in outs) + tp
    p, r = precision_recall(tp, fp, fn)
    f = f1_score(p, r)
    assert 0 <= p <= 1 and 0 <= r <= 1 and 0 <= f <= 1
    assert (f == 1.0) == (p == 1.0 and r == 1.0)


def test_classify_positive_accounting():
    # a positive query whose top-1 is a wrong place counts as a false positive, not a miss
    outs = [hit(0, 1), miss(1, 1), MatchOutcome(2, None, math.inf, None, True)]
    tp, fp, fn = classify(outs, 5.0)
    assert (tp, fp, fn) == (1, 1, 1)
    assert tp + fn <= sum(o.has_true_revisit for o in outs)


def test_recall_at_1():
    assert recall_at_1([hit(k, 1e9) for k in range(4)]) == 1.0
    assert recall_at_1([miss(k, 0.0) for k in range(4)]) == 0.0
    outs = [hit(k, 5.0) for k in range(7)] + [miss(k, 1.0) for k in range(7, 10)]
    assert recall_at_1(outs) == pytest.approx(0.7)


def test_rotation_error_examples():
    assert rotation_error(90, 90) == 0
    assert rotation_error(359, 1) == pytest.approx(2)
    assert rotation_error(180, 0) == 180
    assert rotation_error(-10, 710) == pytest.approx(0)


def test_rotation_error_circle_properties(rng):
    a, b, c = (rng.uniform(-720, 720, 10 ** 4) for _ in range(3))
    for x, y, z in zip(a, b, c):
        dxy = rotation_error(x, y)
        assert 0 <= dxy <= 180
        assert dxy == pytest.approx(rotation_error(y, x), abs=1e-9)
        assert dxy <= rotation_error(x, z) + rotation_error(z, y) + 1e-9


def test_ape_examples():
    t = [Pose2(k, 2 * k, 0.1) for k in range(5)]
    assert ape(t, t) == 0 and ape(t, t, "literal") == 0
    off = [Pose2(p.x + 2, p.y, p.yaw) for p in t]
    assert ape(off, t) == pytest.approx(2.0)
    assert ape(off, t, "literal") == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        ape(t, t[:3])
    with pytest.raises(ValueError):
        ape(t, t, "median")


def test_ape_matches_naive_loops(rng):
    for _ in range(50):
        n = int(rng.integers(1, 40))
        e, g = rng.normal(0, 5, (n, 2)), rng.normal(0, 5, (n, 2))
        for mode in ("rmse", "literal"):
            assert abs(ape(e, g, mode) - oracles.ape_naive(e.tolist(), g.tolist(), mode)) < 1e-9


def test_build_outcomes():
    q_ids, q_xy = [0, 1, 2], [[0, 0], [100, 0], [0, 300]]
    db_ids, db_xy = [10, 11], [[5, 0], [100, 50]]
    matches = {0: (10, 1.0), 1: (10, 2.0)}
    outs = build_outcomes(q_ids, q_xy, matches, db_ids, db_xy, 20.0, 0)
    assert outs[0].has_true_revisit and outs[0].metric_distance_m == pytest.approx(5)
    assert not outs[1].has_true_revisit and outs[1].metric_distance_m == pytest.approx(95)
    assert outs[2].retrieved_id is None and not outs[2].has_true_revisit
    # the only nearby entry sits inside the exclusion window
    outs = build_outcomes([12], [[0, 0]], {}, db_ids, db_xy, 20.0, 5)
    assert not outs[0].has_true_revisit


def test_outcome_and_config_validation():
    with pytest.raises(ValueError):
        MatchOutcome(0, 1, 0.0, None, True)
    with pytest.raises(ConfigError):
        MetricsConfig(revisit_radius_m=0)
