"""Procedural face-like corpus with pixel-exact labels and known poses.

Each sample is a parameterized scene: head ellipse, hair, eyes, nose,
mouth, optional glasses and hat, cloth band, and background, rendered at a
configurable resolution. Geometry responds to a (yaw, pitch, roll) pose:
yaw and pitch shift the facial features, roll rotates the face frame.
Everything derives from (seed, index) alone, so generation is
order-independent and reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import LabelSchema

POSE_RANGE = 45.0


@dataclass
class ProceduralSample:
    id: int
    image: np.ndarray   # (3, H, W) float32 in [-1, 1]
    labels: np.ndarray  # (H, W) uint8
    pose: tuple[float, float, float]


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _rot(dx: np.ndarray, dy: np.ndarray, roll_deg: float):
    t = math.radians(roll_deg)
    c, s = math.cos(t), math.sin(t)
    return c * dx + s * dy, -s * dx + c * dy


def _ellipse(lx: np.ndarray, ly: np.ndarray, cx: float, cy: float,
             rx: float, ry: float) -> np.ndarray:
    return ((lx - cx) / rx) ** 2 + ((ly - cy) / ry) ** 2 <= 1.0


def render_sample(seed: int, index: int, schema: LabelSchema | None = None,
                  res: int = 64) -> ProceduralSample:
    schema = schema or LabelSchema()
    rng = _sample_rng(seed, index)
    lab = {name: schema.index_of(name) for name in schema.names}

    yaw = float(rng.uniform(-POSE_RANGE, POSE_RANGE))
    pitch = float(rng.uniform(-POSE_RANGE, POSE_RANGE))
    roll = float(rng.uniform(-POSE_RANGE, POSE_RANGE))
    yaw_f, pitch_f = yaw / POSE_RANGE, pitch / POSE_RANGE

    cx = res * (0.5 + rng.uniform(-0.03, 0.03))
    cy = res * (0.46 + rng.uniform(-0.03, 0.03))
    ry = res * rng.uniform(0.30, 0.36)
    rx = ry * rng.uniform(0.72, 0.82) * (1.0 - 0.22 * abs(yaw_f))

    ys, xs = np.mgrid[0:res, 0:res].astype(np.float64)
    # face-local frame: roll-rotated offsets from the face center
    lx, ly = _rot(xs - cx, ys - cy, roll)

    labels = np.full((res, res), lab["background"], dtype=np.uint8)

    # cloth: shoulders at the bottom, unrotated
    cloth_cy = res * rng.uniform(1.02, 1.10)
    cloth = _ellipse(xs, ys, cx + res * 0.02 * yaw_f, cloth_cy,
                     res * rng.uniform(0.42, 0.5), res * rng.uniform(0.30, 0.4))
    labels[cloth] = lab["cloth"]

    # hair painted first, face skin over it leaves the rim
    hair = _ellipse(lx, ly, 0.0, -0.10 * ry, rx * 1.22, ry * 1.12)
    labels[hair] = lab["hair"]

    face = _ellipse(lx, ly, 0.0, 0.0, rx, ry)
    labels[face] = lab["skin"]

    if rng.random() < 0.6:  # fringe over the forehead
        depth = rng.uniform(0.05, 0.22)
        fringe = face & (ly < (-0.62 + depth) * ry)
        labels[fringe] = lab["hair"]

    xoff = 0.30 * yaw_f * rx
    yoff = 0.22 * pitch_f * ry

    eye_y = -0.18 * ry + yoff
    eye_rx, eye_ry = 0.14 * rx, 0.085 * ry
    eye_sep = 0.42 * rx
    left_eye = _ellipse(lx, ly, -eye_sep + xoff, eye_y, eye_rx, eye_ry)
    right_eye = _ellipse(lx, ly, eye_sep + xoff, eye_y, eye_rx, eye_ry)
    labels[left_eye] = lab["left_eye"]
    labels[right_eye] = lab["right_eye"]

    has_glasses = rng.random() < 0.30
    if has_glasses:
        ring = np.zeros_like(face)
        for ex in (-eye_sep + xoff, eye_sep + xoff):
            outer = _ellipse(lx, ly, ex, eye_y, eye_rx * 1.9, eye_ry * 2.6)
            inner = _ellipse(lx, ly, ex, eye_y, eye_rx * 1.9 - 1.6, eye_ry * 2.6 - 1.6)
            ring |= outer & ~inner
        bridge = (np.abs(ly - eye_y) < 0.9) & (np.abs(lx - xoff) < eye_sep * 0.55)
        labels[(ring | bridge) & face] = lab["glasses"]

    nose = _ellipse(lx, ly, 0.8 * xoff, 0.12 * ry + 0.6 * yoff,
                    0.09 * rx, 0.17 * ry)
    labels[nose & face] = lab["nose"]

    mouth = _ellipse(lx, ly, 0.7 * xoff, 0.48 * ry + 0.4 * yoff,
                     0.30 * rx, rng.uniform(0.05, 0.10) * ry)
    labels[mouth & face] = lab["mouth"]

    has_hat = rng.random() < 0.25
    if has_hat:
        dome = _ellipse(lx, ly, 0.0, -0.10 * ry, rx * 1.30, ry * 1.18) \
            & (ly < -0.62 * ry)
        band = (np.abs(ly + 0.62 * ry) < 0.07 * ry + 1.0) & (np.abs(lx) < rx * 1.30)
        labels[dome | band] = lab["hat"]

    image = _paint(labels, schema, rng, ys, res)
    return ProceduralSample(id=index, image=image, labels=labels,
                            pose=(yaw, pitch, roll))


def _paint(labels: np.ndarray, schema: LabelSchema, rng: np.random.Generator,
           ys: np.ndarray, res: int) -> np.ndarray:
    base = {
        "background": rng.uniform(0.55, 0.95, 3),
        "skin": np.array([0.87, 0.72, 0.60]) * rng.uniform(0.75, 1.1),
        "left_eye": np.array([0.12, 0.12, 0.16]),
        "right_eye": np.array([0.12, 0.12, 0.16]),
        "nose": np.array([0.80, 0.62, 0.50]) * rng.uniform(0.8, 1.05),
        "mouth": np.array([0.75, 0.25, 0.28]) * rng.uniform(0.8, 1.1),
        "hair": rng.uniform(0.05, 0.55, 3) * np.array([1.0, 0.8, 0.6]),
        "glasses": np.array([0.2, 0.2, 0.22]),
        "hat": rng.uniform(0.2, 0.9, 3),
        "cloth": rng.uniform(0.15, 0.85, 3),
    }
    img = np.zeros((res, res, 3), dtype=np.float64)
    for idx, name in enumerate(schema.names):
        img[labels == idx] = np.clip(base[name], 0, 1)
    shade = (0.88 + 0.18 * (1.0 - ys / res))[..., None]
    img = img * shade + rng.normal(0.0, 0.008, img.shape)
    img = np.clip(img, 0.0, 1.0)
    return (img.transpose(2, 0, 1) * 2.0 - 1.0).astype(np.float32)


def generate_procedural_corpus(n: int, seed: int, schema: LabelSchema | None = None,
                               res: int = 64) -> list[ProceduralSample]:
    if n < 1:
        raise ValueError("n must be >= 1")
    schema = schema or LabelSchema()
    return [render_sample(seed, i, schema, res) for i in range(n)]
