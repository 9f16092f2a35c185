import numpy as np
import pytest
from hypothesis import given, strategies as st

from oselab.errors import AmbientMismatch, NotComplementary, NotGeneralPosition, NotTransverse, RankDeficient, ZeroVector
from oselab.grassmann import (
    Subspace,
    component_norm_bound,
    containment_residual,
    graph_map,
    grassmann_intersect,
    max_pair_cosine,
    orthonormalize,
    subspace_distance,
)

from conftest import random_subspace

e1, e2, e3 = np.eye(3)


def span(*vs):
    return orthonormalize(np.column_stack(vs))


def grid_distance(E, F, m=20001):
    # literal sup over unit v in E of min over w in F of |v - w|, for lines in R^2
    s = np.linspace(-2, 2, m)
    worst = 0.0
    for v in (E.frame[:, 0], -E.frame[:, 0]):
        w = np.outer(s, F.frame[:, 0])
        worst = max(worst, float(np.min(np.linalg.norm(v - w, axis=1))))
    return worst


def test_orthonormalize_examples():
    S = orthonormalize(np.array([[1.0], [0.0]]))
    assert np.allclose(np.abs(S.frame[:, 0]), [1, 0])
    T = orthonormalize(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert T.dim == 2
    assert np.allclose(T.frame.T @ T.frame, np.eye(2), atol=1e-12)
    with pytest.raises(RankDeficient):
        orthonormalize(np.array([[1.0, 2.0], [0.0, 0.0]]))


def test_distance_examples():
    a, b = np.eye(2)
    assert subspace_distance(span(a), span(a)) == pytest.approx(0, abs=1e-15)
    assert subspace_distance(span(a), span(b)) == pytest.approx(1.0)
    diag = span((a + b) / np.sqrt(2))
    assert subspace_distance(span(a), diag) == pytest.approx(np.sin(np.pi / 4), abs=1e-12)
    # literal definition by grid search
    assert grid_distance(span(a), diag) == pytest.approx(np.sqrt(0.5), abs=1e-6)
    with pytest.raises(AmbientMismatch):
        subspace_distance(span(a), span(e1))


def test_distance_between_different_dims():
    E = span(e1)
    F = span(e1, e2)
    # every unit vector of E lies in F, but e2 in F is at distance 1 from E
    assert subspace_distance(E, F) == pytest.approx(1.0)
    assert containment_residual(E, F) == pytest.approx(0.0, abs=1e-15)


def test_graph_map_examples():
    a, b = np.eye(2)
    E = span(a)
    g = graph_map(E, E)
    assert g.operator_norm == pytest.approx(0.0, abs=1e-15)
    F = span(a + 0.5 * b)
    g = graph_map(E, F)
    assert g.operator_norm == pytest.approx(0.5, abs=1e-12)
    lo, hi = g.distance_sandwich()
    assert lo == pytest.approx(0.5 / np.sqrt(1.25))
    assert lo - 1e-12 <= subspace_distance(E, F) <= hi + 1e-12
    assert subspace_distance(g.graph(), F) < 1e-10
    with pytest.raises(NotTransverse):
        graph_map(E, span(b))


def test_max_pair_cosine_examples():
    a, b = np.eye(2)
    assert max_pair_cosine(span(a), span(b)) == pytest.approx(0.0, abs=1e-15)
    assert max_pair_cosine(span(a), span(a + b)) == pytest.approx(1 / np.sqrt(2), abs=1e-12)
    assert max_pair_cosine(span(e1, e2), span(e1 + e3)) == pytest.approx(1 / np.sqrt(2), abs=1e-12)
    with pytest.raises(NotComplementary):
        max_pair_cosine(span(e1), span(e2))
    with pytest.raises(NotComplementary):
        max_pair_cosine(span(e1, e2), span(e1 + e2, e3))


def test_max_pair_cosine_grid_oracle():
    a, b = np.eye(2)
    # sup over unit v in span{e1, e2}, w in span{e1 + e3} of |<v, w>|
    E, F = span(e1, e2), span(e1 + e3)
    t = np.linspace(0, 2 * np.pi, 200001)
    v = np.outer(np.cos(t), E.frame[:, 0]) + np.outer(np.sin(t), E.frame[:, 1])
    best = float(np.max(np.abs(v @ F.frame[:, 0])))
    assert max_pair_cosine(E, F) == pytest.approx(best, abs=1e-9)
    assert max_pair_cosine(span(a), span(a + b)) == pytest.approx(abs(span(a + b).frame[0, 0]), abs=1e-12)


def test_component_norm_bound_examples():
    a, b = np.eye(2)
    r = component_norm_bound(span(a), span(b), a + b)
    assert r.ratio == pytest.approx(1 / np.sqrt(2))
    split = component_norm_bound(span(a), span((a + b) / np.sqrt(2)), b)
    assert np.allclose(split.v, -a, atol=1e-12)
    assert np.allclose(split.w, a + b, atol=1e-12)
    assert split.ratio == pytest.approx(np.sqrt(2))
    assert split.ratio <= 1 / (1 - 1 / np.sqrt(2))
    assert component_norm_bound(span(a), span(a + b), a).ratio == pytest.approx(1.0)
    with pytest.raises(ZeroVector):
        component_norm_bound(span(a), span(b), np.zeros(2))


def test_intersect_examples():
    S = grassmann_intersect(span(e1, e2), span(e2, e3))
    assert S.dim == 1
    assert subspace_distance(S, span(e2)) < 1e-12
    S = grassmann_intersect(span(e1, e2), span(e1 + e3, e2 - e3))
    assert S.dim == 1
    assert containment_residual(S, span(e1, e2)) < 1e-9
    assert containment_residual(S, span(e1 + e3, e2 - e3)) < 1e-9
    # the common direction is e1 + e2
    assert subspace_distance(S, span(e1 + e2)) < 1e-12


def test_intersect_transverse_planes_in_r4(rng):
    E, F = random_subspace(rng, 4, 2), random_subspace(rng, 4, 2)
    Z = grassmann_intersect(E, F)
    assert Z.dim == 0 and Z.is_zero
    with pytest.raises(NotGeneralPosition):
        grassmann_intersect(span(*np.eye(4)[:2]), span(*np.eye(4)[[1, 2]]))


def test_subspace_rejects_bad_frames():
    with pytest.raises(ValueError):
        Subspace(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        Subspace(np.ones(3))


dims = st.integers(min_value=2, max_value=6)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


@given(dims, seeds)
def test_distance_symmetric_and_orthogonally_invariant(d, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, d))
    E, F = random_subspace(rng, d, k), random_subspace(rng, d, k)
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    dist = subspace_distance(E, F)
    assert 0 <= dist <= 1
    assert dist == pytest.approx(subspace_distance(F, E), abs=1e-12)
    assert subspace_distance(orthonormalize(Q @ E.frame), orthonormalize(Q @ F.frame)) == pytest.approx(dist, abs=1e-10)
    assert subspace_distance(E, E) < 1e-12


def test_graph_sandwich_on_random_pairs(rng):
    for _ in range(1000):
        d = int(rng.integers(2, 7))
        k = int(rng.integers(1, d))
        E = random_subspace(rng, d, k)
        F = orthonormalize(E.frame + rng.uniform(0.01, 1.5) * rng.standard_normal((d, k)))
        g = graph_map(E, F)
        lo, hi = g.distance_sandwich()
        dist = subspace_distance(E, F)
        assert lo - 1e-10 <= dist <= hi + 1e-10
        assert g.operator_norm == pytest.approx(np.linalg.svd(g.map_matrix, compute_uv=False)[0], abs=1e-12)


@given(dims, seeds)
def test_intersection_contained_in_both(d, seed):
    rng = np.random.default_rng(seed)
    kp = int(rng.integers(1, d + 1))
    km = int(rng.integers(d - kp, d + 1)) if d - kp >= 1 else int(rng.integers(1, d + 1))
    if kp + km < d:
        return
    P, M = random_subspace(rng, d, kp), random_subspace(rng, d, km)
    S = grassmann_intersect(P, M)
    assert S.dim == kp + km - d
    if S.dim:
        assert containment_residual(S, P) < 1e-9
        assert containment_residual(S, M) < 1e-9


@given(dims, seeds)
def test_component_ratio_below_angle_bound(d, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, d))
    E, F = random_subspace(rng, d, k), random_subspace(rng, d, d - k)
    u = rng.standard_normal(d)
    split = component_norm_bound(E, F, u)
    assert np.allclose(split.v + split.w, u, atol=1e-9 * np.linalg.norm(u) / (1 - max_pair_cosine(E, F)))
    assert split.ratio <= 1 / (1 - max_pair_cosine(E, F)) * (1 + 1e-9)
