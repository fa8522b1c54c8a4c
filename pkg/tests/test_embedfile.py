import numpy as np
import pytest

from flowatlas.embedfile import read_embedding_file, write_embedding_file
from flowatlas.errors import BadMagic, TruncatedPayload, UnsupportedVersion


def test_known_small_matrix_layout(tmp_path):
    m = np.arange(12, dtype=np.float32).reshape(3, 4)
    path = tmp_path / "m.tfv"
    write_embedding_file(m, path)
    data = path.read_bytes()
    assert len(data) == 4 + 4 + 4 + 3 * 4 * 4
    assert data[:4] == b"TFV1"
    assert int.from_bytes(data[4:8], "little") == 3
    assert int.from_bytes(data[8:12], "little") == 4
    back = read_embedding_file(path)
    assert back.dtype == np.float32
    assert back.tobytes() == m.tobytes()


def test_round_trip_large_random(tmp_path):
    rng = np.random.default_rng(42)
    m = rng.standard_normal((1000, 768)).astype(np.float32)
    path = tmp_path / "big.tfv"
    write_embedding_file(m, path)
    back = read_embedding_file(path)
    assert back.shape == (1000, 768)
    assert back.tobytes() == m.tobytes()  # bit-exact


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.tfv"
    path.write_bytes(b"XXXX" + b"\x00" * 8)
    with pytest.raises(BadMagic):
        read_embedding_file(path)


def test_unsupported_version(tmp_path):
    path = tmp_path / "v9.tfv"
    path.write_bytes(b"TFV9" + (0).to_bytes(4, "little") * 2)
    with pytest.raises(UnsupportedVersion):
        read_embedding_file(path)


def test_truncated_payload(tmp_path):
    m = np.ones((2, 3), dtype=np.float32)
    path = tmp_path / "t.tfv"
    write_embedding_file(m, path)
    data = path.read_bytes()
    path.write_bytes(data[:-4])
    with pytest.raises(TruncatedPayload):
        read_embedding_file(path)


def test_trailing_bytes_rejected(tmp_path):
    m = np.ones((2, 3), dtype=np.float32)
    path = tmp_path / "t.tfv"
    write_embedding_file(m, path)
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(TruncatedPayload):
        read_embedding_file(path)


def test_header_only_file(tmp_path):
    path = tmp_path / "h.tfv"
    path.write_bytes(b"TFV1")
    with pytest.raises(TruncatedPayload):
        read_embedding_file(path)
