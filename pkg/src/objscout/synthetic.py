"""Seeded synthetic sequences: a textured square over noise, plus distractors.

The generator is the desk-scale stand-in for a real benchmark sequence:
one bright textured square follows a bouncing linear trajectory over a
dark noisy background while short-lived distractor blobs appear at a
configurable rate. Ground truth tracks only the square. Output is fully
reproducible from the seed, byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from PIL import Image

from .exceptions import ConfigError
from .geometry import BoundingBox

_BACKGROUND = 0.12
_TEXTURE_LOW, _TEXTURE_HIGH = 0.55, 0.95
_DISTRACTOR_LOW, _DISTRACTOR_HIGH = 0.45, 0.80
_DISTRACTOR_SIZES = (5, 9)
_DISTRACTOR_LIFETIMES = (1, 2)


@dataclass(frozen=True)
class SyntheticSpec:
    width: int = 64
    height: int = 64
    frames: int = 30
    object_size: int = 14
    start: tuple[float, float] = (6.0, 8.0)
    velocity: tuple[float, float] = (1.4, 0.9)
    noise: float = 0.05
    distractor_rate: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.width < 8 or self.height < 8:
            raise ConfigError(f"width/height must be >= 8, got {self.width}x{self.height}")
        if self.frames < 1:
            raise ConfigError(f"frames must be >= 1, got {self.frames}")
        if not 4 <= self.object_size <= min(self.width, self.height) - 2:
            raise ConfigError(
                f"object_size must fit the {self.width}x{self.height} image, got {self.object_size}"
            )
        if not 0.0 <= self.noise <= 0.3:
            raise ConfigError(f"noise must lie in [0, 0.3], got {self.noise}")
        if not 0.0 <= self.distractor_rate <= 1.0:
            raise ConfigError(f"distractor_rate must lie in [0, 1], got {self.distractor_rate}")

    @classmethod
    def from_json(cls, text: str, seed: int | None = None) -> "SyntheticSpec":
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise ConfigError("synthetic spec must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown synthetic spec fields: {sorted(unknown)}")
        if seed is not None:
            doc["seed"] = seed
        for key in ("start", "velocity"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)


def _bounce(pos: float, vel: float, size: int, limit: int) -> tuple[float, float]:
    pos += vel
    if pos < 0.0:
        pos, vel = -pos, -vel
    if pos + size > limit:
        pos, vel = 2.0 * (limit - size) - pos, -vel
    return pos, vel


def _object_track(spec: SyntheticSpec) -> list[BoundingBox]:
    x, y = spec.start
    vx, vy = spec.velocity
    s = spec.object_size
    boxes = []
    for _ in range(spec.frames):
        cx = min(max(int(round(x)), 0), spec.width - s)
        cy = min(max(int(round(y)), 0), spec.height - s)
        boxes.append(BoundingBox(cx, cy, s, s))
        x, vx = _bounce(x, vx, s, spec.width)
        y, vy = _bounce(y, vy, s, spec.height)
    return boxes


def generate_synthetic(spec: SyntheticSpec, out_dir: str | Path) -> tuple[Path, Path]:
    """Write the frames and ground truth of a synthetic sequence.

    Returns (frame directory, ground-truth manifest path). Frames are
    8-bit PNGs named by zero-padded index; the manifest is gt.json with
    one box per frame. Distractor blobs are never labeled.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    s = spec.object_size
    texture = rng.uniform(_TEXTURE_LOW, _TEXTURE_HIGH, size=(s, s, 3))
    track = _object_track(spec)

    distractors: list[tuple[BoundingBox, np.ndarray, int]] = []
    gt_entries = []
    for i, obj_box in enumerate(track):
        img = np.full((spec.height, spec.width, 3), _BACKGROUND)
        if spec.noise > 0.0:
            img += rng.uniform(0.0, spec.noise, size=img.shape)

        # age out expired distractors, then maybe spawn one
        distractors = [(b, pat, life) for b, pat, life in distractors if life > 0]
        if rng.random() < spec.distractor_rate:
            spawned = _spawn_distractor(rng, spec, obj_box)
            if spawned is not None:
                distractors.append(spawned)
        for box, pattern, _ in distractors:
            img[box.y : box.y2, box.x : box.x2] = pattern
        distractors = [(b, pat, life - 1) for b, pat, life in distractors]

        img[obj_box.y : obj_box.y2, obj_box.x : obj_box.x2] = texture

        frame_u8 = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
        Image.fromarray(frame_u8).save(out_dir / f"{i:05d}.png")
        gt_entries.append(
            {"frame": i, "box": {"x": obj_box.x, "y": obj_box.y, "w": obj_box.w, "h": obj_box.h}}
        )

    gt_path = out_dir / "gt.json"
    doc = {
        "sequence": "synthetic",
        "width": spec.width,
        "height": spec.height,
        "spec": asdict(spec),
        "frames": gt_entries,
    }
    gt_path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return out_dir, gt_path


def _spawn_distractor(
    rng: np.random.Generator, spec: SyntheticSpec, obj_box: BoundingBox
) -> tuple[BoundingBox, np.ndarray, int] | None:
    """A short-lived blob that never overlaps the labeled object."""
    lo, hi = _DISTRACTOR_SIZES
    for _ in range(10):
        size = int(rng.integers(lo, hi + 1))
        x = int(rng.integers(0, spec.width - size + 1))
        y = int(rng.integers(0, spec.height - size + 1))
        box = BoundingBox(x, y, size, size)
        if box.x >= obj_box.x2 or obj_box.x >= box.x2 or box.y >= obj_box.y2 or obj_box.y >= box.y2:
            base = rng.uniform(_DISTRACTOR_LOW, _DISTRACTOR_HIGH)
            pattern = np.clip(
                base + rng.uniform(-0.08, 0.08, size=(size, size, 3)), 0.0, 1.0
            )
            lifetime = int(rng.integers(_DISTRACTOR_LIFETIMES[0], _DISTRACTOR_LIFETIMES[1] + 1))
            return box, pattern, lifetime
    return None
