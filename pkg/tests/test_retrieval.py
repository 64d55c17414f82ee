import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from referee.descriptor import DescriptorConfig, r_referee
from referee.errors import ConfigError, DescriptorMismatchError
from referee.features import FeatureImage
from referee.kdtree import KDTree, linear_scan
from referee.retrieval import (DescriptorDatabase, RetrievalConfig, build_database, l2_distance,
                               nearest_candidate, query)
from referee.scan_io import DescriptorRecord

import oracles


def db_of(vectors, ids=None, use_kdtree=True):
    ids = range(len(vectors)) if ids is None else ids
    recs = [DescriptorRecord(i, np.asarray(v, dtype=float), np.zeros(1), 0) for i, v in zip(ids, vectors)]
    return build_database(recs, use_kdtree)


def test_l2_examples(rng):
    assert l2_distance([1, 2, 3], [1, 2, 3]) == 0
    assert l2_distance([0, 3], [4, 0]) == 5
    a, b = rng.random(42), rng.random(42)
    naive = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    assert l2_distance(a, b) == pytest.approx(naive, rel=1e-9)
    with pytest.raises(ValueError):
        l2_distance([1, 2], [1, 2, 3])


def test_query_finds_itself():
    db = db_of([[1.0, 2.0], [5.0, 5.0]])
    c = query(db, [1.0, 2.0], 0, RetrievalConfig(tau=1e-6, exclusion_window=0))
    assert (c.cand_id, c.distance, c.accepted) == (0, 0.0, True)


def test_query_small_example():
    db = db_of([[0, 0], [10, 10]])
    c = query(db, [1, 1], 7, RetrievalConfig(tau=5, exclusion_window=0))
    assert c.cand_id == 0 and c.distance == pytest.approx(math.sqrt(2))


def test_query_rejects_above_tau():
    db = db_of([[0, 0]])
    cfg = RetrievalConfig(tau=1.0, exclusion_window=0)
    assert query(db, [3, 4], 9, cfg) is None
    c = nearest_candidate(db, [3, 4], 9, cfg)
    assert c.distance == 5.0 and not c.accepted


def test_strict_threshold():
    db = db_of([[0, 0]])
    assert query(db, [3, 4], 9, RetrievalConfig(tau=5.0, exclusion_window=0)) is None


def test_exclusion_window():
    db = db_of([[0.0], [0.1], [5.0]], ids=[10, 11, 30])
    c = nearest_candidate(db, [0.0], 12, RetrievalConfig(exclusion_window=2))
    assert c.cand_id == 30
    assert nearest_candidate(db, [0.0], 20, RetrievalConfig(exclusion_window=100)) is None


def test_single_record_database():
    db = db_of([[3.0, 1.0]])
    assert len(db) == 1 and len(db.tree) == 1
    assert nearest_candidate(db, [-100.0, 7.0], 5, RetrievalConfig(exclusion_window=0)).cand_id == 0


@pytest.mark.parametrize("use_kdtree", [True, False])
def test_duplicates_resolve_to_smallest_id(use_kdtree):
    db = db_of([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]], ids=[9, 4, 6], use_kdtree=use_kdtree)
    assert nearest_candidate(db, [1.0, 1.0], 100, RetrievalConfig(exclusion_window=0)).cand_id == 4


def test_query_matches_linear_oracle(rng):
    pts = rng.random((200, 42)).astype(np.float32).astype(float)
    db = db_of(pts)
    for q in rng.random((50, 42)):
        c = nearest_candidate(db, q, 10 ** 6, RetrievalConfig(exclusion_window=0))
        k, d2 = oracles.nearest(pts.tolist(), list(range(200)), q.tolist(), 10 ** 6, 0)
        assert c.cand_id == k
        assert c.distance == pytest.approx(math.sqrt(d2), rel=1e-12)


def test_kdtree_equals_linear_scan(rng):
    pts = rng.random((1000, 8))
    ids = rng.permutation(1000)
    tree = KDTree(pts, ids)
    q = rng.random((100, 8))
    qids = rng.integers(0, 1000, 100)
    for w in (0, 30):
        a = tree.query(q, qids, w)
        b = linear_scan(pts, ids, q, qids, w)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@given(arrays(np.float64, st.tuples(st.integers(1, 60), st.integers(1, 4)),
              elements=st.integers(-3, 3).map(float)),
       st.integers(0, 5), st.integers(1, 8))
def test_kdtree_oracle_with_ties(pts, window, leaf):
    # small integer grids force many exact distance ties
    n = len(pts)
    ids = np.arange(n)[::-1].copy()
    tree = KDTree(pts, ids, leaf_size=leaf)
    q = pts[: min(n, 10)] + 0.5
    qids = np.arange(len(q))
    a = tree.query(q, qids, window)
    b = linear_scan(pts, ids, q, qids, window)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    for k in range(len(q)):
        ref, _ = oracles.nearest(pts.tolist(), ids.tolist(), q[k].tolist(), int(qids[k]), window)
        assert a[0][k] == ref


@given(st.floats(0, 100), st.floats(0, 100), st.floats(0.001, 100))
def test_threshold_monotone(d, t1, dt):
    db = db_of([[0.0]])
    c1 = nearest_candidate(db, [d], 99, RetrievalConfig(tau=t1, exclusion_window=0))
    c2 = nearest_candidate(db, [d], 99, RetrievalConfig(tau=t1 + dt, exclusion_window=0))
    assert not c1.accepted or c2.accepted


def test_shifted_scan_retrieves_at_zero(rng):
    m = rng.random((40, 42)) < 0.2
    cfg = DescriptorConfig(beta=1)
    a = r_referee(FeatureImage(m), cfg)
    b = r_referee(FeatureImage(np.roll(m, 13, axis=0)), cfg)
    other = r_referee(FeatureImage(rng.random((40, 42)) < 0.2), cfg)
    recs = [DescriptorRecord(0, a, np.zeros(1), 0), DescriptorRecord(1, other, np.zeros(1), 0)]
    c = nearest_candidate(build_database(recs), b, 5, RetrievalConfig(exclusion_window=0))
    assert c.cand_id == 0 and c.distance == 0.0


def test_database_validation():
    with pytest.raises(ValueError):
        DescriptorDatabase([])
    recs = [DescriptorRecord(0, np.zeros(3), np.zeros(1), 0), DescriptorRecord(1, np.zeros(3), np.zeros(1), 1)]
    with pytest.raises(DescriptorMismatchError):
        DescriptorDatabase(recs)
    with pytest.raises(ValueError):
        db_of([[0.0, 0.0]]).nearest([[1.0, 2.0, 3.0]])


def test_config_validation():
    with pytest.raises(ConfigError):
        RetrievalConfig(tau=-1)
    with pytest.raises(ConfigError):
        RetrievalConfig(exclusion_window=-1)
