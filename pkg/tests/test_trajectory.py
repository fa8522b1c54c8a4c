import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowatlas.errors import (
    CaseSetMismatch,
    EmptySet,
    TrajectoryTooShort,
    UnknownCase,
)
from flowatlas.projection import fit_pca_2d
from flowatlas.trajectory import (
    DissimilarityCache,
    Trajectory,
    build_trajectory,
    compare_embedding_variants,
    convergence_radius,
    mean_convergence_radius,
    path_cost,
    top_k_similar,
    trajectory_dissimilarity,
)

from oracles import dtw_oracle


def traj(case_id, xy):
    return Trajectory(case_id=case_id, channel="pressure",
                      points=tuple((t, float(x), float(y))
                                   for t, (x, y) in enumerate(xy)))


def random_traj(rng, case_id="r", n=None):
    n = n or int(rng.integers(2, 7))
    return traj(case_id, rng.uniform(-5, 5, size=(n, 2)).tolist())


# -- build_trajectory -----------------------------------------------------------

def test_build_trajectory_orders_by_t(mini_handle):
    result = fit_pca_2d(mini_handle, "pressure", mini_handle.case_ids())
    t0 = build_trajectory(result, "case_000")
    assert [p[0] for p in t0.points] == list(range(len(t0)))
    assert t0.channel == "pressure"
    with pytest.raises(UnknownCase):
        build_trajectory(result, "missing")


def test_permuted_coord_storage_gives_identical_trajectory(mini_handle):
    from flowatlas.projection import ProjectionResult
    result = fit_pca_2d(mini_handle, "pressure", mini_handle.case_ids())
    shuffled = dict(reversed(list(result.coords.items())))
    permuted = ProjectionResult(spec=result.spec, coords=shuffled,
                                fit_stats=result.fit_stats)
    assert build_trajectory(permuted, "case_002") == \
        build_trajectory(result, "case_002")


def test_single_frame_trajectory(tmp_path):
    import numpy as np

    from flowatlas.dataset import load_dataset
    from conftest import DEFAULT_PARAMS, make_dataset
    cases = {
        "one": (DEFAULT_PARAMS, {"pressure": np.ones((1, 4), dtype=np.float32)}),
        "two": (DEFAULT_PARAMS, {"pressure": np.random.default_rng(0)
                                 .normal(size=(5, 4)).astype(np.float32)}),
    }
    handle = load_dataset(make_dataset(tmp_path / "ds", cases))
    result = fit_pca_2d(handle, "pressure", ["one", "two"])
    assert len(build_trajectory(result, "one")) == 1


# -- convergence radius -----------------------------------------------------------

def test_constant_trajectory_radius_zero():
    t = traj("c", [(1.5, -2.5)] * 7)
    stats = convergence_radius(t, 5)
    assert stats.radius == 0.0
    assert stats.k_window == 5


def test_hand_example_radius():
    t = traj("c", [(0, 0), (2, 0), (0, 2), (-2, 0), (0, -2)])
    stats = convergence_radius(t, 5)
    assert stats.tail_mean == (0.0, 0.0)
    assert abs(stats.radius - 1.6) < 1e-12


def test_window_clamps_to_length():
    t = traj("c", [(0, 0), (4, 0), (8, 0)])
    stats = convergence_radius(t, 5)
    assert stats.k_window == 3
    assert stats.tail_mean == (4.0, 0.0)
    assert stats.radius == pytest.approx(8.0 / 3.0, abs=1e-12)


def test_radius_translation_invariant():
    rng = np.random.default_rng(0)
    xy = rng.uniform(-3, 3, size=(9, 2))
    a = convergence_radius(traj("c", xy.tolist()), 5).radius
    b = convergence_radius(traj("c", (xy + [17.0, -4.0]).tolist()), 5).radius
    assert a == pytest.approx(b, abs=1e-9)


def test_mean_and_variant_comparison():
    flat = [traj("a", [(0, 0)] * 6), traj("b", [(1, 1)] * 6)]
    spread = [traj("a", [(0, 0), (2, 0), (0, 2), (-2, 0), (0, -2), (0, 0)]),
              traj("b", [(0, 0), (4, 0), (0, 4), (-4, 0), (0, -4), (0, 0)])]
    assert mean_convergence_radius(flat, 5) == 0.0
    assert compare_embedding_variants(flat, flat, 5) == 0.0
    reduction = compare_embedding_variants(flat, spread, 5)
    assert reduction == 100.0
    with pytest.raises(EmptySet):
        compare_embedding_variants([], flat)
    with pytest.raises(CaseSetMismatch):
        compare_embedding_variants(flat, [spread[0]])


def test_halved_radii_give_fifty_percent():
    base = [traj("a", [(0, 0), (2, 0), (0, 2), (-2, 0), (0, -2)])]
    half = [traj("a", [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1)])]
    assert compare_embedding_variants(half, base, 5) == pytest.approx(50.0, abs=1e-12)


# -- DTW dissimilarity ------------------------------------------------------------

def test_identical_trajectories_zero():
    rng = np.random.default_rng(1)
    t = random_traj(rng, n=6)
    res = trajectory_dissimilarity(t, t)
    assert res.value == 0.0
    assert res.path[0] == (1, 1)
    assert res.path[-1] == (6, 6)


def test_too_short_rejected():
    t1 = traj("a", [(0, 0)])
    t2 = traj("b", [(0, 0), (1, 1)])
    with pytest.raises(TrajectoryTooShort):
        trajectory_dissimilarity(t1, t2)


def test_small_example_matches_enumeration():
    a = traj("a", [(0, 0), (1, 0)])
    b = traj("b", [(0, 0), (1, 0), (2, 0)])
    res = trajectory_dissimilarity(a, b)
    want, _ = dtw_oracle([p[1:] for p in a.points], [p[1:] for p in b.points])
    assert res.value == want


def test_matches_exhaustive_oracle_over_many_pairs():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        a, b = random_traj(rng, "a"), random_traj(rng, "b")
        res = trajectory_dissimilarity(a, b)
        want, best_paths = dtw_oracle([p[1:] for p in a.points],
                                      [p[1:] for p in b.points])
        assert res.value == want
        zero_based = tuple((i - 1, j - 1) for i, j in res.path)
        assert list(zero_based) in [list(p) for p in best_paths]


def test_symmetry_and_path_validity():
    rng = np.random.default_rng(77)
    for _ in range(50):
        a, b = random_traj(rng, "a"), random_traj(rng, "b")
        ab = trajectory_dissimilarity(a, b)
        ba = trajectory_dissimilarity(b, a)
        assert abs(ab.value - ba.value) <= 1e-9
        assert ab.value >= 0.0
        assert ab.path[0] == (1, 1)
        assert ab.path[-1] == (len(a), len(b))
        for (i0, j0), (i1, j1) in zip(ab.path, ab.path[1:]):
            assert (i1 - i0, j1 - j0) in ((1, 0), (0, 1), (1, 1))
        assert abs(path_cost(a, b, ab.path) - ab.value) <= 1e-9


def test_rigid_motion_invariance():
    rng = np.random.default_rng(5)
    a, b = random_traj(rng, "a", 6), random_traj(rng, "b", 5)
    theta = 1.1
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    shift = np.array([40.0, -7.0])

    def moved(t):
        xy = t.xy() @ rot.T + shift
        return traj(t.case_id, xy.tolist())

    v0 = trajectory_dissimilarity(a, b).value
    v1 = trajectory_dissimilarity(moved(a), moved(b)).value
    assert v1 == pytest.approx(v0, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(1e-3, 1e3))
def test_uniform_scaling_invariance(seed, scale):
    rng = np.random.default_rng(seed)
    a, b = random_traj(rng, "a"), random_traj(rng, "b")

    def scaled(t):
        return traj(t.case_id, (t.xy() * scale).tolist())

    v0 = trajectory_dissimilarity(a, b).value
    v1 = trajectory_dissimilarity(scaled(a), scaled(b)).value
    assert v1 == pytest.approx(v0, rel=1e-6)


# -- top-k retrieval --------------------------------------------------------------

def test_duplicate_case_ranks_first(tmp_path):
    import numpy as np

    from flowatlas.dataset import load_dataset
    from conftest import DEFAULT_PARAMS, make_dataset
    rng = np.random.default_rng(0)
    base = rng.normal(size=(8, 6)).astype(np.float32)
    far = (rng.normal(size=(8, 6)) + 40.0).astype(np.float32)
    cases = {"orig": (DEFAULT_PARAMS, {"pressure": base}),
             "copy": (DEFAULT_PARAMS, {"pressure": base.copy()}),
             "far": (DEFAULT_PARAMS, {"pressure": far})}
    handle = load_dataset(make_dataset(tmp_path / "ds", cases))
    proj = fit_pca_2d(handle, "pressure", ["orig", "copy", "far"])
    ranked = top_k_similar(handle, proj, "orig", k=2)
    assert ranked[0] == ("copy", 0.0)
    assert ranked[1][0] == "far"
    assert ranked[1][1] > 0.0


def test_k_larger_than_candidates(retrieval_handle):
    proj = fit_pca_2d(retrieval_handle, "pressure", retrieval_handle.case_ids())
    ranked = top_k_similar(retrieval_handle, proj, "case_000", k=100)
    assert len(ranked) == 9


def test_matches_exhaustive_ranking(retrieval_handle):
    proj = fit_pca_2d(retrieval_handle, "pressure", retrieval_handle.case_ids())
    target = "case_003"
    ranked = top_k_similar(retrieval_handle, proj, target, k=6)
    # independent exhaustive ranking with the documented tie rule
    scores = []
    t_target = build_trajectory(proj, target)
    for cid in proj.spec.scope:
        if cid == target:
            continue
        other = build_trajectory(proj, cid)
        if len(other) < 2:
            continue
        scores.append((trajectory_dissimilarity(t_target, other).value, cid))
    scores.sort()
    assert ranked == [(cid, v) for v, cid in scores[:6]]
    with pytest.raises(UnknownCase):
        top_k_similar(retrieval_handle, proj, "ghost")


def test_cache_reuse(retrieval_handle):
    proj = fit_pca_2d(retrieval_handle, "pressure", retrieval_handle.case_ids())
    cache = DissimilarityCache()
    a = top_k_similar(retrieval_handle, proj, "case_001", k=6, cache=cache)
    b = top_k_similar(retrieval_handle, proj, "case_001", k=6, cache=cache)
    assert a == b
    assert cache.get(proj.spec.spec_hash(), "case_001", a[0][0]) == a[0][1]
