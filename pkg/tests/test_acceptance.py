"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion.
"""

import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from flowatlas.clustering import cluster_projection, dbscan, select_centroids
from flowatlas.dataset import load_dataset
from flowatlas.embedfile import read_embedding_file, write_embedding_file
from flowatlas.projection import fit_pca_2d, pca_2d
from flowatlas.reports import FRAME_INSTRUCTION, ReportEngine, save_annotation
from flowatlas.service import create_app
from flowatlas.stores import AnnotationStore, ReportStore
from flowatlas.synthkit import ScenarioSpec, generate, variant_pair
from flowatlas.trajectory import (
    Trajectory,
    build_trajectory,
    convergence_radius,
    mean_convergence_radius,
    path_cost,
    top_k_similar,
    trajectory_dissimilarity,
)
from flowatlas.util import canonical_json
from flowatlas.vlm import MockVlmClient

from conftest import DEFAULT_PARAMS, make_dataset
from oracles import centroid_oracle, dbscan_oracle, dtw_oracle, pca_2d_oracle


def ok(criterion: str):
    print(f"\n[PASS] {criterion}")


def make_traj(case_id, xy):
    return Trajectory(case_id=case_id, channel="pressure",
                      points=tuple((t, float(x), float(y))
                                   for t, (x, y) in enumerate(xy)))


def test_criterion_1_dtw_oracle_equality():
    """DTW == exhaustive path enumeration on 200 random pairs, lengths <= 6."""
    start = time.monotonic()
    rng = np.random.default_rng(20240901)
    for trial in range(200):
        na, nb = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        a = make_traj("a", rng.uniform(-5, 5, size=(na, 2)).tolist())
        b = make_traj("b", rng.uniform(-5, 5, size=(nb, 2)).tolist())
        res = trajectory_dissimilarity(a, b)
        want, _ = dtw_oracle([p[1:] for p in a.points], [p[1:] for p in b.points])
        assert res.value == want, f"trial {trial}: {res.value} != {want}"
        # self-dissimilarity is exactly zero
        assert trajectory_dissimilarity(a, a).value == 0.0
        # symmetry within 1e-9
        assert abs(res.value - trajectory_dissimilarity(b, a).value) <= 1e-9
        # reported path recomputes to the reported value within 1e-9
        assert abs(path_cost(a, b, res.path) - res.value) <= 1e-9
    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"took {elapsed:.1f}s"
    ok("criterion 1: DTW dissimilarity exact vs enumeration oracle "
       f"(200 pairs, {elapsed:.1f}s)")


def test_criterion_2_dbscan_oracle_equality():
    """Partition equality with the textbook O(n^2) oracle, 20 seeds x 3 settings."""
    from flowatlas.projection import ProjectionResult, ProjectionSpec
    start = time.monotonic()
    settings = [(0.15, 4), (0.08, 3), (0.25, 6)]
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(100, 501))
        pts = rng.uniform(0, 1, size=(n, 2)).tolist()
        spec = ProjectionSpec(channel="pressure", method="pca", scope=("c",))
        projection = ProjectionResult(
            spec=spec, coords={("c", i): tuple(p) for i, p in enumerate(pts)})
        for eps, min_samples in settings:
            model = dbscan(projection, eps, min_samples)
            got = [model.labels[("c", i)] for i in range(n)]
            want = dbscan_oracle(pts, eps, min_samples)
            assert got == want, f"seed={seed} eps={eps} min_samples={min_samples}"
    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"took {elapsed:.1f}s"
    ok(f"criterion 2: DBSCAN partition equality, 20 seeds x 3 settings ({elapsed:.1f}s)")


def test_criterion_3_centroid_argmin():
    """Centroid == brute-force argmin with tie rule on 50 random clusterings."""
    from flowatlas.projection import ProjectionResult, ProjectionSpec
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(20, 100))
        pts = rng.uniform(-1, 1, size=(n, 2)).tolist()
        spec = ProjectionSpec(channel="pressure", method="pca", scope=("c",))
        projection = ProjectionResult(
            spec=spec, coords={("c", i): tuple(p) for i, p in enumerate(pts)})
        eps = float(rng.uniform(0.05, 0.4))
        min_samples = int(rng.integers(1, 6))
        model = select_centroids(dbscan(projection, eps, min_samples), projection)
        clusters = {}
        for key, lab in model.labels.items():
            if lab != -1:
                clusters.setdefault(lab, []).append((key, projection.coords[key]))
        assert set(model.centroids) == set(clusters)
        for cid, members in clusters.items():
            assert model.centroids[cid] == centroid_oracle(members)

    # square corners: all distances equal, tie resolves to lowest (case_id, t_index)
    spec = ProjectionSpec(channel="pressure", method="pca", scope=("c",))
    corners = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
    projection = ProjectionResult(
        spec=spec, coords={("c", i): c for i, c in enumerate(corners)})
    model = select_centroids(dbscan(projection, 3.0, 2), projection)
    assert model.centroids[0] == ("c", 0)
    ok("criterion 3: centroid argmin + tie rule (50 clusterings, square corners)")


def test_criterion_4_pca():
    """Orthonormality <= 1e-8, oracle coords <= 1e-6, translation <= 1e-8."""
    rng = np.random.default_rng(4242)
    for trial in range(20):
        X = rng.normal(size=(50, 10))
        fit = pca_2d(X)
        gram = fit.components @ fit.components.T
        assert np.abs(gram - np.eye(2)).max() <= 1e-8
        oracle_coords, _ = pca_2d_oracle(X)
        assert np.abs(fit.coords - oracle_coords).max() <= 1e-6, f"trial {trial}"
        shift = rng.normal(size=10) * 50
        shifted = pca_2d(X + shift)
        assert np.abs(fit.coords - shifted.coords).max() <= 1e-8
    ok("criterion 4: PCA orthonormality, oracle agreement, translation invariance "
       "(20 datasets)")


def test_criterion_5_convergence_radius(tmp_path):
    """Hand example exact; focused beats diluted in >= 99/100 seeds."""
    hand = make_traj("h", [(0, 0), (2, 0), (0, 2), (-2, 0), (0, -2)])
    stats = convergence_radius(hand, 5)
    assert abs(stats.radius - 1.6) < 1e-12

    wins = 0
    for seed in range(100):
        spec = ScenarioSpec(n_cases=5, frames_min=18, frames_max=24,
                            regimes=("converging",), signal_dim=6, noise_dim=6,
                            seed=seed, signal_noise=0.005, noise_scale=1.0,
                            decay=0.8)
        means = {}
        for name, variant in zip(("focused", "diluted"), variant_pair(spec)):
            manifest = generate(variant, tmp_path / f"{seed}_{name}",
                                write_images=False)
            handle = load_dataset(manifest)
            projection = fit_pca_2d(handle, "pressure", handle.case_ids())
            trajectories = [build_trajectory(projection, cid)
                            for cid in handle.case_ids()]
            means[name] = mean_convergence_radius(trajectories, 5)
        if means["focused"] < means["diluted"]:
            wins += 1
    assert wins >= 99, f"focused smaller in only {wins}/100 seeds"
    ok(f"criterion 5: convergence radius hand example exact; focused < diluted "
       f"in {wins}/100 seeds")


def test_criterion_6_top_k(retrieval_handle, tmp_path):
    """top_k_similar == exhaustive ranking; duplicate first at 0; default k=6."""
    projection = fit_pca_2d(retrieval_handle, "pressure",
                            retrieval_handle.case_ids())
    for target in retrieval_handle.case_ids():
        ranked = top_k_similar(retrieval_handle, projection, target)  # default k
        assert len(ranked) == min(6, retrieval_handle.n_cases - 1)
        target_traj = build_trajectory(projection, target)
        scores = []
        for cid in projection.spec.scope:
            if cid == target:
                continue
            other = build_trajectory(projection, cid)
            if len(other) < 2:
                continue
            scores.append((trajectory_dissimilarity(target_traj, other).value, cid))
        scores.sort()
        assert ranked == [(cid, v) for v, cid in scores[:6]]

    rng = np.random.default_rng(0)
    base = rng.normal(size=(8, 6)).astype(np.float32)
    far = (rng.normal(size=(8, 6)) + 30.0).astype(np.float32)
    handle = load_dataset(make_dataset(
        tmp_path / "dup",
        {"orig": (DEFAULT_PARAMS, {"pressure": base}),
         "copy": (DEFAULT_PARAMS, {"pressure": base.copy()}),
         "far": (DEFAULT_PARAMS, {"pressure": far})}))
    proj = fit_pca_2d(handle, "pressure", handle.case_ids())
    ranked = top_k_similar(handle, proj, "orig", k=2)
    assert ranked[0] == ("copy", 0.0)
    ok("criterion 6: top-k equals exhaustive ranking on the 10-case fixture; "
       "duplicate ranks first at 0; default k=6")


def test_criterion_7_report_pipeline(mini_dir, tmp_path):
    """Mock-mode prompts, byte-identical regeneration, store persistence,
    end-to-end API session without network."""
    start = time.monotonic()
    handle = load_dataset(mini_dir / "manifest.json")
    projection = fit_pca_2d(handle, "pressure", handle.case_ids())
    model = cluster_projection(projection, eps=1.0, min_samples=2)
    store_path = tmp_path / "annotations.jsonl"
    engine = ReportEngine(handle, AnnotationStore(store_path),
                          ReportStore(tmp_path / "reports.jsonl"), MockVlmClient())
    k = 3
    for cid in list(sorted(model.centroids))[:k]:
        save_annotation(engine.annotations, model, cid,
                        f"mode {cid}: surge between isolator and cavity", "e1")

    report = engine.generate_frame_report(projection, model, "case_000", 2, k=k)
    messages = engine.rebuild_frame_prompt(projection, report)
    parts = messages[1]["content"]
    images = [p for p in parts if p["type"] == "image_url"]
    texts = [p["text"] for p in parts if p["type"] == "text"]
    annotation_texts = [t for t in texts if t.startswith("Expert annotation")]
    assert len(annotation_texts) == k
    assert len(images) == k + 1
    distances = [float(t.split("latent distance ")[1].split(")")[0])
                 for t in annotation_texts]
    assert distances == sorted(distances)
    assert texts[-1] == FRAME_INSTRUCTION

    again = engine.generate_frame_report(projection, model, "case_000", 2, k=k)
    assert again.text == report.text
    assert canonical_json(engine.rebuild_frame_prompt(projection, again)) == \
        canonical_json(messages)

    # annotation store survives "restart" (fresh handles over the same file)
    reopened = AnnotationStore(store_path)
    key = (model.params.model_hash(), sorted(model.centroids)[0])
    assert reopened.latest(key) is not None

    # end-to-end scripted session against the fixture, mock VLM, no network
    app = create_app(manifest_path=mini_dir / "manifest.json",
                     cache_dir=tmp_path / "cache", vlm=MockVlmClient())
    with TestClient(app) as client:
        cases = client.get("/api/cases", params={"p_min": 0.8, "p_max": 2.1,
                                                 "t_min": 565, "t_max": 830,
                                                 "h2o_min": 7.8, "h2o_max": 14}).json()
        case_ids = [c["case_id"] for c in cases["cases"]]
        assert len(case_ids) == 6
        r = client.post("/api/projection", json={"channel": "pressure",
                                                 "case_ids": case_ids,
                                                 "method": "pca"})
        assert r.status_code == 200
        pid = r.json()["job"]["job_id"]
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            body = client.get(f"/api/projection/{pid}").json()
            if body["status"] == "done":
                break
            time.sleep(0.02)
        assert body["status"] == "done"
        cl = client.post("/api/clustering", json={"projection_id": pid,
                                                  "eps": 1.0, "min_samples": 2})
        assert cl.status_code == 200
        clustering_id = cl.json()["clustering_id"]
        centroid_ids = [c["cluster_id"] for c in cl.json()["centroids"]][:2]
        for cid in centroid_ids:
            r = client.put(f"/api/annotation/{clustering_id}/{cid}",
                           json={"text": f"mode {cid}", "author": "e1"})
            assert r.status_code == 200
        fr = client.post("/api/report/frame", json={"clustering_id": clustering_id,
                                                    "case_id": case_ids[0],
                                                    "t_index": 0, "k": 2})
        assert fr.status_code == 200
        cr = client.post("/api/report/case", json={"clustering_id": clustering_id,
                                                   "case_id": case_ids[0], "k": 2})
        assert cr.status_code == 200
        assert cr.json()["report"]["text"]

    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    ok(f"criterion 7: mock report pipeline + end-to-end API session ({elapsed:.1f}s)")


def test_criterion_8_formats(tmp_path, mini_dir):
    """Embedding round-trip bit-exact; filter endpoint closed at exact bounds."""
    rng = np.random.default_rng(8)
    matrix = rng.standard_normal((1000, 768)).astype(np.float32)
    path = tmp_path / "big.tfv"
    write_embedding_file(matrix, path)
    back = read_embedding_file(path)
    assert back.tobytes() == matrix.tobytes()

    app = create_app(manifest_path=mini_dir / "manifest.json",
                     cache_dir=tmp_path / "cache", vlm=MockVlmClient())
    with TestClient(app) as client:
        # the mini fixture has cases exactly at the documented endpoints
        full = client.get("/api/cases", params={"p_min": 0.8, "p_max": 2.1,
                                                "t_min": 565, "t_max": 830,
                                                "h2o_min": 7.8, "h2o_max": 14}).json()
        assert len(full["cases"]) == 6
        low = client.get("/api/cases", params={"p_min": 0.8, "p_max": 0.8}).json()
        assert [c["case_id"] for c in low["cases"]] == ["case_000"]
        assert low["cases"][0]["params"]["P_MPa"] == 0.8
        high = client.get("/api/cases", params={"p_min": 2.1, "p_max": 2.1}).json()
        assert [c["case_id"] for c in high["cases"]] == ["case_005"]
        just_inside = client.get("/api/cases",
                                 params={"p_min": 0.8000001, "p_max": 2.1}).json()
        assert "case_000" not in [c["case_id"] for c in just_inside["cases"]]
    ok("criterion 8: embedding round-trip bit-exact (1000x768); "
       "filter closed-interval endpoints honored")
