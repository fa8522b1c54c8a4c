"""Command-line interface (shared binary for batch analytics and the server).

Batch report commands write delimited output plus a rendered figure
alongside it (same stem, ``.png``); pass ``--no-fig`` to skip the figure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .clustering import cluster_projection, export_centroids_csv, export_labels_csv
from .dataset import DatasetHandle, load_dataset
from .errors import FlowAtlasError
from .projection import ProjectionResult, fit_pca_2d, import_external_projection
from .synthkit import BUILTIN_SCENARIOS, ScenarioSpec, generate
from .trajectory import build_trajectory, convergence_radius, trajectory_dissimilarity


def _scope_for(handle: DatasetHandle, channel: str,
               cases_arg: str | None) -> list[str]:
    if cases_arg:
        return sorted(cases_arg.split(","))
    return [cid for cid in handle.case_ids()
            if channel in handle.case(cid).channels]


def _projection_for(handle: DatasetHandle, channel: str, scope: list[str],
                    projection_arg: str) -> ProjectionResult:
    if projection_arg == "pca":
        return fit_pca_2d(handle, channel, scope)
    return import_external_projection(handle, channel, scope, projection_arg)


def _fig_path(out: Path) -> Path:
    return out.with_suffix(".png")


def cmd_similarity_matrix(args) -> int:
    handle = load_dataset(args.manifest)
    scope = _scope_for(handle, args.channel, args.cases)
    projection = _projection_for(handle, args.channel, scope, args.projection)

    trajectories = {}
    for case_id in scope:
        traj = build_trajectory(projection, case_id)
        if len(traj) < 2:
            print(f"warning: case {case_id} has < 2 frames, excluded",
                  file=sys.stderr)
            continue
        trajectories[case_id] = traj
    ids = sorted(trajectories)
    n = len(ids)
    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            value = trajectory_dissimilarity(trajectories[ids[i]],
                                             trajectories[ids[j]]).value
            matrix[i, j] = matrix[j, i] = value

    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id"] + ids)
        for i, case_id in enumerate(ids):
            writer.writerow([case_id] + [f"{v:.12g}" for v in matrix[i]])
    print(f"wrote {out} ({n}x{n})")

    if not args.no_fig:
        from .figures import save_similarity_heatmap
        fig = save_similarity_heatmap(ids, matrix, _fig_path(out))
        print(f"wrote {fig}")
    return 0


def cmd_convergence(args) -> int:
    handle = load_dataset(args.manifest)
    scope = _scope_for(handle, args.channel, args.cases)
    projection = _projection_for(handle, args.channel, scope, args.projection)

    out = Path(args.out)
    radii = {}
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id", "k_window", "radius", "tail_x", "tail_y"])
        for case_id in scope:
            stats = convergence_radius(build_trajectory(projection, case_id), args.k)
            radii[case_id] = stats.radius
            writer.writerow([case_id, stats.k_window, f"{stats.radius:.12g}",
                             f"{stats.tail_mean[0]:.12g}",
                             f"{stats.tail_mean[1]:.12g}"])
    mean = float(np.mean(list(radii.values()))) if radii else float("nan")
    print(f"wrote {out} (mean radius {mean:.6g} over {len(radii)} cases)")

    if not args.no_fig:
        from .figures import save_convergence_chart
        fig = save_convergence_chart(radii, _fig_path(out), args.k)
        print(f"wrote {fig}")
    return 0


def cmd_cluster(args) -> int:
    handle = load_dataset(args.manifest)
    scope = _scope_for(handle, args.channel, args.cases)
    projection = _projection_for(handle, args.channel, scope, args.projection)
    model = cluster_projection(projection, args.eps, args.min_samples)

    out = Path(args.out)
    export_labels_csv(model, out)
    centroids_out = out.with_name(out.stem + "_centroids" + out.suffix)
    export_centroids_csv(model, centroids_out)
    noise = sum(1 for v in model.labels.values() if v == -1)
    print(f"wrote {out} and {centroids_out} "
          f"({model.n_clusters} clusters, {noise} noise points)")

    if not args.no_fig:
        from .figures import save_cluster_scatter
        fig = save_cluster_scatter(projection, model, _fig_path(out),
                                   highlight_case=args.highlight)
        print(f"wrote {fig}")
    return 0


def cmd_generate_fixture(args) -> int:
    if args.builtin:
        spec = BUILTIN_SCENARIOS[args.builtin]()
    elif args.spec:
        spec = ScenarioSpec.from_json(args.spec)
    else:
        print("error: pass --spec FILE or --builtin NAME", file=sys.stderr)
        return 2
    manifest = generate(spec, args.out, write_images=not args.no_images)
    truth = json.loads((Path(args.out) / "ground_truth.json").read_text())
    print(f"wrote {manifest} ({len(truth['cases'])} cases, "
          f"seed {truth['seed']})")
    return 0


def cmd_serve(args) -> int:
    from .service import serve
    serve(manifest=args.manifest, port=args.port, host=args.host,
          cache_dir=args.cache_dir, store_dir=args.store_dir,
          static_dir=args.static_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowatlas",
        description="Latent-trajectory analytics for flow-field embeddings.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_dataset_args(p, with_projection=True):
        p.add_argument("--manifest", required=True, help="dataset manifest path")
        p.add_argument("--channel", required=True, help="physical field name")
        p.add_argument("--cases", help="comma-separated case ids (default: all)")
        if with_projection:
            p.add_argument("--projection", default="pca",
                           help="'pca' or path to an external projection CSV")
        p.add_argument("--no-fig", action="store_true",
                       help="skip the figure next to the delimited output")

    p = sub.add_parser("similarity-matrix",
                       help="full symmetric DTW dissimilarity matrix")
    add_dataset_args(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(fn=cmd_similarity_matrix)

    p = sub.add_parser("convergence", help="per-case convergence radii")
    add_dataset_args(p)
    p.add_argument("--k", type=int, default=5, help="tail window size")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(fn=cmd_convergence)

    p = sub.add_parser("cluster", help="DBSCAN labels, centroids and scatter")
    add_dataset_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--min-samples", type=int, required=True)
    p.add_argument("--highlight", help="case id to overlay as a trajectory")
    p.add_argument("--out", required=True, help="labels CSV path")
    p.set_defaults(fn=cmd_cluster)

    p = sub.add_parser("generate-fixture", help="synthetic dataset generator")
    p.add_argument("--spec", help="scenario spec JSON")
    p.add_argument("--builtin", choices=sorted(BUILTIN_SCENARIOS),
                   help="named built-in scenario")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-images", action="store_true",
                   help="skip placeholder frame images")
    p.set_defaults(fn=cmd_generate_fixture)

    p = sub.add_parser("serve", help="run the HTTP API server")
    p.add_argument("--manifest", required=True)
    p.add_argument("--port", type=int, default=8640)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--cache-dir", default="cache")
    p.add_argument("--store-dir", default=None,
                   help="annotation/report store dir (default: CACHE_DIR/stores)")
    p.add_argument("--static-dir", default=None,
                   help="built frontend assets to serve at /")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FlowAtlasError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
