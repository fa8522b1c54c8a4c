import csv
import json

import numpy as np
import pytest

from flowatlas.cli import main


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_similarity_matrix_command(mini_dir, tmp_path, capsys):
    out = tmp_path / "matrix.csv"
    rc = main(["similarity-matrix", "--manifest", str(mini_dir / "manifest.json"),
               "--channel", "pressure", "--out", str(out)])
    assert rc == 0
    rows = read_csv(out)
    ids = rows[0][1:]
    assert len(ids) == 6
    values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    assert np.allclose(values, values.T)  # symmetric
    assert np.allclose(np.diag(values), 0.0)
    assert (tmp_path / "matrix.png").is_file()  # figure alongside the CSV


def test_convergence_command(mini_dir, tmp_path):
    out = tmp_path / "radii.csv"
    rc = main(["convergence", "--manifest", str(mini_dir / "manifest.json"),
               "--channel", "pressure", "--k", "5", "--out", str(out)])
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["case_id", "k_window", "radius", "tail_x", "tail_y"]
    assert len(rows) == 7
    assert all(float(r[2]) >= 0 for r in rows[1:])
    assert (tmp_path / "radii.png").is_file()


def test_convergence_no_fig(mini_dir, tmp_path):
    out = tmp_path / "radii.csv"
    rc = main(["convergence", "--manifest", str(mini_dir / "manifest.json"),
               "--channel", "OH", "--out", str(out), "--no-fig"])
    assert rc == 0
    assert out.is_file()
    assert not (tmp_path / "radii.png").exists()


def test_cluster_command(mini_dir, tmp_path):
    out = tmp_path / "labels.csv"
    rc = main(["cluster", "--manifest", str(mini_dir / "manifest.json"),
               "--channel", "pressure", "--eps", "1.0", "--min-samples", "2",
               "--highlight", "case_000", "--out", str(out)])
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["case_id", "t_index", "label"]
    centroid_rows = read_csv(tmp_path / "labels_centroids.csv")
    assert centroid_rows[0] == ["cluster_id", "case_id", "t_index", "x", "y"]
    assert len(centroid_rows) > 1
    assert (tmp_path / "labels.png").is_file()


def test_generate_fixture_from_spec_file(tmp_path):
    spec_doc = {"n_cases": 3, "frames_min": 4, "frames_max": 6,
                "regimes": ["converging"], "signal_dim": 4, "noise_dim": 0,
                "seed": 1, "channels": ["pressure"], "dataset_name": "cli-test"}
    spec_path = tmp_path / "scenario.json"
    spec_path.write_text(json.dumps(spec_doc))
    rc = main(["generate-fixture", "--spec", str(spec_path),
               "--out", str(tmp_path / "ds")])
    assert rc == 0
    manifest = json.loads((tmp_path / "ds" / "manifest.json").read_text())
    assert manifest["dataset_name"] == "cli-test"
    assert len(manifest["cases"]) == 3


def test_generate_fixture_builtin(tmp_path):
    rc = main(["generate-fixture", "--builtin", "mini",
               "--out", str(tmp_path / "mini"), "--no-images"])
    assert rc == 0
    assert (tmp_path / "mini" / "ground_truth.json").is_file()


def test_external_projection_argument(mini_dir, tmp_path):
    from flowatlas.dataset import load_dataset
    from flowatlas.projection import export_projection_csv, fit_pca_2d

    handle = load_dataset(mini_dir / "manifest.json")
    result = fit_pca_2d(handle, "pressure", handle.case_ids())
    layout = tmp_path / "layout.csv"
    export_projection_csv(result, layout)
    out = tmp_path / "radii.csv"
    rc = main(["convergence", "--manifest", str(mini_dir / "manifest.json"),
               "--channel", "pressure", "--projection", str(layout),
               "--out", str(out), "--no-fig"])
    assert rc == 0
    assert len(read_csv(out)) == 7


def test_error_reporting(tmp_path, capsys):
    rc = main(["convergence", "--manifest", str(tmp_path / "nope.json"),
               "--channel", "pressure", "--out", str(tmp_path / "x.csv")])
    assert rc == 2
    assert "missing_file" in capsys.readouterr().err
