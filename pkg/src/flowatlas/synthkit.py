"""Synthetic dataset generator with controlled ground truth.

Produces datasets in the exact on-disk formats (manifest + binary embedding
files + placeholder images + ground-truth sidecar) so tests and fixtures can
exercise the full pipeline without real simulation data.

Case regimes model qualitatively different temporal behaviors in latent
space:

* ``converging``    step size decays geometrically toward an anchor
* ``diverging``     step size grows geometrically away from it
* ``oscillatory``   the offset orbits the anchor at fixed radius
* ``transitioning`` the anchor switches mid-sequence (index recorded)

"Focused vs. diluted" variant pairs share bit-identical signal coordinates;
the diluted variant appends ``noise_dim`` pure-noise coordinates. This is
arranged by drawing signal and noise from independent sub-streams of the
seed, so regenerating with a different ``noise_dim`` never perturbs the
signal part.

All randomness comes from a 64-bit xorshift-family generator with documented
constants; no wall clock, no library RNG, so a fixed seed gives byte-identical
output on regeneration.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import H2O_PCT_RANGE, P_MPA_RANGE, T_K_RANGE
from .embedfile import write_embedding_file

REGIMES = ("converging", "oscillatory", "diverging", "transitioning")

_MASK64 = (1 << 64) - 1
# Rational rotation (3-4-5 triangle): orbits stay libm-free and bit-stable.
_ROT_COS, _ROT_SIN = 0.8, 0.6


class Xorshift64Star:
    """xorshift64* — shifts 12/25/27, multiplier 0x2545F4914F6CDD1D."""

    def __init__(self, seed: int):
        # splitmix64 warm-up so small/zero seeds still give a useful state
        x = (seed & _MASK64) or 0x9E3779B97F4A7C15
        for _ in range(2):
            x = (x + 0x9E3779B97F4A7C15) & _MASK64
            x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
            x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
            x ^= x >> 31
        self._state = x or 1

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def normal(self) -> float:
        # Irwin-Hall (12 uniforms): adds only, so results do not depend on libm.
        return sum(self.uniform() for _ in range(12)) - 6.0

    def normals(self, n: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(n)], dtype=np.float64)

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.next_u64() % (hi - lo + 1)


def _sub_seed(seed: int, *parts) -> int:
    tag = "|".join([str(seed)] + [str(p) for p in parts])
    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:8], "little")


@dataclass(frozen=True)
class ScenarioSpec:
    n_cases: int
    frames_min: int
    frames_max: int
    regimes: tuple[str, ...] = REGIMES  # cycled over cases
    signal_dim: int = 8
    noise_dim: int = 0
    seed: int = 0
    channels: tuple[str, ...] = ("pressure",)
    dataset_name: str = "synthetic"
    # generator constants (documented, not per the on-disk contract)
    decay: float = 0.85
    growth: float = 1.12
    signal_noise: float = 0.01
    noise_scale: float = 0.5
    anchor_scale: float = 3.0

    def __post_init__(self):
        if self.n_cases < 1 or self.signal_dim < 1 or self.noise_dim < 0:
            raise ValueError("n_cases and signal_dim must be >= 1, noise_dim >= 0")
        if not 1 <= self.frames_min <= self.frames_max:
            raise ValueError("need 1 <= frames_min <= frames_max")
        unknown = set(self.regimes) - set(REGIMES)
        if unknown:
            raise ValueError(f"unknown regimes: {sorted(unknown)}")

    @classmethod
    def from_json(cls, path: str | Path) -> "ScenarioSpec":
        doc = json.loads(Path(path).read_text())
        for key in ("regimes", "channels"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)


@dataclass
class SynthCase:
    case_id: str
    regime: str
    n_frames: int
    params: dict  # {"P_MPa": .., "T_K": .., "H2O_pct": ..}
    embeddings: dict[str, np.ndarray] = field(default_factory=dict)  # channel -> float32
    truth: dict = field(default_factory=dict)   # channel -> anchors / transition index


def _lerp(rng: tuple[float, float], f: float) -> float:
    return rng[0] + f * (rng[1] - rng[0])


def _case_params(i: int, n: int) -> dict:
    # Spread across the documented parameter bounds, endpoints included;
    # temperature runs opposite to pressure so the columns are not collinear.
    f = 0.5 if n == 1 else i / (n - 1)
    return {"P_MPa": _lerp(P_MPA_RANGE, f),
            "T_K": _lerp(T_K_RANGE, 1.0 - f),
            "H2O_pct": _lerp(H2O_PCT_RANGE, f)}


def _signal_path(spec: ScenarioSpec, regime: str, n_frames: int,
                 rng: Xorshift64Star) -> tuple[np.ndarray, dict]:
    """Latent path in signal space plus its ground-truth record."""
    d = spec.signal_dim
    anchor = spec.anchor_scale * rng.normals(d)
    offset = spec.anchor_scale * rng.normals(d)
    truth: dict = {"regime": regime, "anchor": anchor.tolist(),
                   "anchor2": None, "transition_t": None}

    pos = np.empty((n_frames, d), dtype=np.float64)
    anchor2 = None
    transition_t = None
    if regime == "transitioning":
        anchor2 = spec.anchor_scale * rng.normals(d)
        transition_t = n_frames // 2
        truth["anchor2"] = anchor2.tolist()
        truth["transition_t"] = transition_t

    cur_anchor = anchor
    for t in range(n_frames):
        if regime == "transitioning" and t == transition_t:
            offset = (cur_anchor + offset) - anchor2
            cur_anchor = anchor2
        pos[t] = cur_anchor + offset
        if regime == "converging" or regime == "transitioning":
            offset = offset * spec.decay
        elif regime == "diverging":
            offset = offset * spec.growth
        else:  # oscillatory: rotate the first two offset coordinates
            x, y = offset[0], offset[1] if d > 1 else 0.0
            rx = _ROT_COS * x - _ROT_SIN * y
            ry = _ROT_SIN * x + _ROT_COS * y
            offset = offset.copy()
            offset[0] = rx
            if d > 1:
                offset[1] = ry

    if spec.signal_noise > 0:
        for t in range(n_frames):
            pos[t] += spec.signal_noise * rng.normals(d)
    return pos, truth


def synthesize(spec: ScenarioSpec) -> list[SynthCase]:
    """Generate all cases in memory (no disk I/O)."""
    cases = []
    for i in range(spec.n_cases):
        case_id = f"case_{i:03d}"
        regime = spec.regimes[i % len(spec.regimes)]
        layout = Xorshift64Star(_sub_seed(spec.seed, "layout", i))
        n_frames = layout.randint(spec.frames_min, spec.frames_max)
        case = SynthCase(case_id=case_id, regime=regime, n_frames=n_frames,
                         params=_case_params(i, spec.n_cases))
        for channel in spec.channels:
            sig_rng = Xorshift64Star(_sub_seed(spec.seed, "signal", i, channel))
            signal, truth = _signal_path(spec, regime, n_frames, sig_rng)
            if spec.noise_dim > 0:
                noise_rng = Xorshift64Star(_sub_seed(spec.seed, "noise", i, channel))
                noise = np.empty((n_frames, spec.noise_dim))
                for t in range(n_frames):
                    noise[t] = spec.noise_scale * noise_rng.normals(spec.noise_dim)
                rows = np.hstack([signal, noise])
            else:
                rows = signal
            case.embeddings[channel] = rows.astype(np.float32)
            case.truth[channel] = truth
        cases.append(case)
    return cases


def variant_pair(spec: ScenarioSpec) -> tuple[ScenarioSpec, ScenarioSpec]:
    """(focused, diluted) specs sharing bit-identical signal coordinates.

    The focused variant drops the pure-noise coordinates; everything else,
    including every signal-stream draw, is unchanged.
    """
    if spec.noise_dim < 1:
        raise ValueError("diluted variant needs noise_dim >= 1")
    focused = replace(spec, noise_dim=0,
                      dataset_name=spec.dataset_name + "-focused")
    diluted = replace(spec, dataset_name=spec.dataset_name + "-diluted")
    return focused, diluted


def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    return (struct.pack(">I", len(payload)) + tag + payload
            + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF))


def write_placeholder_png(path: Path, rgb: tuple[int, int, int], frame_id: str,
                          size: tuple[int, int] = (32, 24)) -> None:
    """Solid-color PNG with the frame id stored in a tEXt chunk."""
    w, h = size
    scanlines = (bytes([0]) + bytes(rgb) * w) * h
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    text = b"id\x00" + frame_id.encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"\x89PNG\r\n\x1a\n"
                     + _png_chunk(b"IHDR", ihdr)
                     + _png_chunk(b"tEXt", text)
                     + _png_chunk(b"IDAT", zlib.compress(scanlines, 9))
                     + _png_chunk(b"IEND", b""))


def generate(spec: ScenarioSpec, out_dir: str | Path,
             write_images: bool = True) -> Path:
    """Write the full on-disk dataset; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cases = synthesize(spec)

    manifest_cases = []
    truth_cases = []
    for ci, case in enumerate(cases):
        channels_doc = {}
        for chi, channel in enumerate(spec.channels):
            emb_rel = f"embeddings/{case.case_id}_{channel}.tfv"
            write_embedding_file(case.embeddings[channel], out / emb_rel)
            frames = []
            for t in range(case.n_frames):
                img_rel = f"images/{case.case_id}/{channel}/{t:04d}.png"
                if write_images:
                    rgb = ((37 * ci + 11) % 256, (59 * chi + 23) % 256, (91 * t + 47) % 256)
                    write_placeholder_png(out / img_rel, rgb,
                                          f"{case.case_id}/{channel}/{t}")
                frames.append({"t_index": t, "time_ms": t * 0.25, "image": img_rel})
            channels_doc[channel] = {"embedding_file": emb_rel, "frames": frames}
        manifest_cases.append({"case_id": case.case_id, "params": case.params,
                               "channels": channels_doc})
        truth_cases.append({"case_id": case.case_id, "regime": case.regime,
                            "n_frames": case.n_frames, "params": case.params,
                            "channels": case.truth})

    manifest = {
        "dataset_name": spec.dataset_name,
        "channels": list(spec.channels),
        "embedding_provenance": f"synthetic (seed={spec.seed})",
        "cases": manifest_cases,
    }
    truth = {
        "dataset_name": spec.dataset_name,
        "seed": spec.seed,
        "generator": {
            "family": "xorshift64*",
            "decay": spec.decay, "growth": spec.growth,
            "signal_noise": spec.signal_noise, "noise_scale": spec.noise_scale,
            "anchor_scale": spec.anchor_scale,
        },
        "signal_dim": spec.signal_dim,
        "noise_dim": spec.noise_dim,
        "cases": truth_cases,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    (out / "ground_truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    return manifest_path


def dataset_digest(root: str | Path) -> str:
    """SHA-256 over every file (paths + contents) under ``root``."""
    root = Path(root)
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(str(path.relative_to(root)).encode())
        h.update(b"\x00")
        h.update(path.read_bytes())
        h.update(b"\x01")
    return h.hexdigest()


def mini_scenario() -> ScenarioSpec:
    """The 6-case fixture used throughout the test suite."""
    return ScenarioSpec(
        n_cases=6, frames_min=8, frames_max=12,
        regimes=("converging", "oscillatory", "diverging", "transitioning"),
        signal_dim=16, noise_dim=0, seed=20240601,
        channels=("pressure", "OH"), dataset_name="mini",
    )


def retrieval_scenario() -> ScenarioSpec:
    """10-case fixture for similarity-ranking tests."""
    return ScenarioSpec(
        n_cases=10, frames_min=6, frames_max=14,
        regimes=("converging", "oscillatory", "diverging", "transitioning"),
        signal_dim=8, noise_dim=2, seed=77, channels=("pressure",),
        dataset_name="retrieval10",
    )


BUILTIN_SCENARIOS = {"mini": mini_scenario, "retrieval10": retrieval_scenario}
