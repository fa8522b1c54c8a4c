import json

import numpy as np
import pytest

from flowatlas.dataset import load_dataset
from flowatlas.embedfile import write_embedding_file
from flowatlas.synthkit import generate, mini_scenario, retrieval_scenario


@pytest.fixture(scope="session")
def mini_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixtures") / "mini"
    generate(mini_scenario(), out)
    return out


@pytest.fixture(scope="session")
def mini_handle(mini_dir):
    return load_dataset(mini_dir / "manifest.json")


@pytest.fixture(scope="session")
def retrieval_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixtures") / "retrieval10"
    generate(retrieval_scenario(), out)
    return out


@pytest.fixture(scope="session")
def retrieval_handle(retrieval_dir):
    return load_dataset(retrieval_dir / "manifest.json")


def make_dataset(root, cases, channels=("pressure",), dataset_name="handmade"):
    """Write a dataset from {case_id: (params_dict, {channel: ndarray})}.

    Frame images are referenced but not written (loading does not touch them).
    """
    root.mkdir(parents=True, exist_ok=True)
    case_docs = []
    for case_id in sorted(cases):
        params, per_channel = cases[case_id]
        channels_doc = {}
        for channel, rows in per_channel.items():
            rows = np.asarray(rows, dtype=np.float32)
            emb_rel = f"embeddings/{case_id}_{channel}.tfv"
            write_embedding_file(rows, root / emb_rel)
            frames = [{"t_index": t, "time_ms": t * 0.5,
                       "image": f"images/{case_id}/{channel}/{t:04d}.png"}
                      for t in range(rows.shape[0])]
            channels_doc[channel] = {"embedding_file": emb_rel, "frames": frames}
        case_docs.append({"case_id": case_id, "params": params,
                          "channels": channels_doc})
    manifest = {"dataset_name": dataset_name, "channels": list(channels),
                "cases": case_docs}
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


DEFAULT_PARAMS = {"P_MPa": 1.0, "T_K": 600.0, "H2O_pct": 10.0}
