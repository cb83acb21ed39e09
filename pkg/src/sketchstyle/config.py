"""Configuration objects shared across the model, losses, and training."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import yaml


class ConfigError(ValueError):
    """Raised when a configuration is internally inconsistent."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def default_channel_map(max_res: int, max_channels: int = 64) -> dict[int, int]:
    """Channel count per resolution: wide at coarse scales, tapering by 1/res."""
    base = max_channels * 8
    out = {}
    res = 4
    while res <= max_res:
        out[res] = min(max_channels, base // res)
        res *= 2
    return out


@dataclass
class GeneratorConfig:
    """Shape of the style-based generator.

    Style rows are allocated the way skip-architecture generators consume
    them: the 4x4 level has one styled conv, every later level has two, and
    the RGB projection at each level shares its row with the next level's
    first conv (the final level gets one extra row for its projection).
    With two styles per level this yields 18 rows at 1024 output and a
    7 high / 11 low split when the replacement sits at 32.
    """

    base_res: int = 4
    max_res: int = 64
    style_dim: int = 64
    styles_per_level: int = 2
    replacement_res: int = 8
    rgb_channels: int = 3
    channel_map: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.channel_map:
            self.channel_map = default_channel_map(self.max_res, self.style_dim)
        self.validate()

    def validate(self):
        if self.base_res != 4:
            raise ConfigError(f"base_res must be 4, got {self.base_res}")
        for name in ("max_res", "replacement_res"):
            if not _is_pow2(getattr(self, name)):
                raise ConfigError(f"{name} must be a power of two")
        if not self.base_res <= self.replacement_res < self.max_res:
            raise ConfigError(
                f"need base_res <= replacement_res < max_res, got "
                f"{self.base_res}/{self.replacement_res}/{self.max_res}"
            )
        if self.styles_per_level != 2:
            raise ConfigError("style row allocation is defined for 2 styles per level")
        missing = [r for r in self.resolutions if r not in self.channel_map]
        if missing:
            raise ConfigError(f"channel_map missing resolutions {missing}")

    @property
    def resolutions(self) -> list[int]:
        out, res = [], self.base_res
        while res <= self.max_res:
            out.append(res)
            res *= 2
        return out

    @property
    def num_levels(self) -> int:
        return len(self.resolutions)

    @property
    def num_styles(self) -> int:
        return self.styles_per_level * self.num_levels

    @property
    def replacement_level(self) -> int:
        """Index of the replacement resolution among the levels."""
        return int(math.log2(self.replacement_res)) - 2

    @property
    def high_style_count(self) -> int:
        """Rows consumed strictly before the replacement point."""
        return 2 * self.replacement_level + 1

    @property
    def low_style_count(self) -> int:
        return self.num_styles - self.high_style_count

    def conv_rows(self, level: int) -> list[int]:
        """Style rows feeding the styled convs of the given level."""
        if level == 0:
            return [0]
        return [2 * level - 1, 2 * level]

    def rgb_row(self, level: int) -> int:
        """Style row feeding the RGB projection of the given level."""
        return 2 * level + 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channel_map"] = {str(k): v for k, v in self.channel_map.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        d = dict(d)
        if "channel_map" in d and d["channel_map"]:
            d["channel_map"] = {int(k): int(v) for k, v in d["channel_map"].items()}
        return cls(**d)


MODALITIES = ("both", "sketch", "mask")


@dataclass
class EncoderConfig:
    """Shape of the condition encoding network."""

    cond_res: int = 64
    num_labels: int = 10
    branch_out_channels: int = 16
    feature_head_blocks: int = 8
    image_head_blocks: int = 3
    norm_kind: str = "instance"
    modality: str = "both"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not _is_pow2(self.cond_res):
            raise ConfigError("cond_res must be a power of two")
        if self.feature_head_blocks < 1 or self.image_head_blocks < 1:
            raise ConfigError("head block counts must be >= 1")
        if self.norm_kind not in ("instance", "none"):
            raise ConfigError(f"unknown norm_kind {self.norm_kind!r}")
        if self.modality not in MODALITIES:
            raise ConfigError(f"modality must be one of {MODALITIES}")

    @property
    def merged_channels(self) -> int:
        # A single modality doubles its branch width so the merged trunk
        # sees the same channel count as the two-branch configuration.
        return 2 * self.branch_out_channels

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        return cls(**d)


@dataclass
class LossWeights:
    lambda_l1: float = 1.0
    lambda_gp: float = 1.0
    lambda_lp: float = 1.0
    lambda_fm: float = 1.0

    def __post_init__(self):
        vals = (self.lambda_l1, self.lambda_gp, self.lambda_lp, self.lambda_fm)
        if any(v < 0 for v in vals):
            raise ConfigError("loss weights must be nonnegative")
        if all(v == 0 for v in vals):
            raise ConfigError("at least one loss weight must be positive")


@dataclass
class LossConfig:
    patch_count: int = 20
    patch_size: int = 16
    global_resize: int = 64
    fm_levels: list[int] = field(default_factory=lambda: [4, 5])
    crop_seed: int = 0

    def __post_init__(self):
        if self.patch_count < 1:
            raise ConfigError("patch_count must be >= 1")

    def validate_against(self, gen_config: GeneratorConfig):
        if self.patch_size >= gen_config.max_res:
            raise ConfigError("patch_size must be smaller than the image")
        repl_level = int(math.log2(gen_config.replacement_res))
        bad = [l for l in self.fm_levels if l <= repl_level]
        if bad:
            raise ConfigError(
                f"fm_levels {bad} not strictly above the replacement level {repl_level}"
            )


@dataclass
class TrainConfig:
    steps: int = 20_000
    batch_size: int = 8
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    seed: int = 0
    checkpoint_interval: int = 1000
    modality: str = "both"
    replacement_res: int = 8

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.modality not in MODALITIES:
            raise ConfigError(f"modality must be one of {MODALITIES}")


DEFAULT_LABEL_NAMES = (
    "background", "skin", "left_eye", "right_eye", "nose",
    "mouth", "hair", "glasses", "hat", "cloth",
)

DEFAULT_PALETTE = (
    (0, 0, 0),        # background
    (222, 180, 140),  # skin
    (0, 120, 255),    # left_eye
    (0, 200, 255),    # right_eye
    (255, 160, 0),    # nose
    (255, 0, 80),     # mouth
    (110, 60, 20),    # hair
    (190, 190, 190),  # glasses
    (130, 0, 200),    # hat
    (0, 160, 60),     # cloth
)


@dataclass
class LabelSchema:
    names: tuple[str, ...] = DEFAULT_LABEL_NAMES
    palette: tuple[tuple[int, int, int], ...] = DEFAULT_PALETTE

    def __post_init__(self):
        if self.names[0] != "background":
            raise ConfigError("label 0 must be background")
        if len(self.palette) != len(self.names):
            raise ConfigError("palette and names must have equal length")
        if len(set(self.palette)) != len(self.palette):
            raise ConfigError("palette colors must be distinct")

    @property
    def num_labels(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def flat_palette(self) -> list[int]:
        """256-entry RGB palette for indexed PNG export."""
        flat = [c for rgb in self.palette for c in rgb]
        flat += [0] * (768 - len(flat))
        return flat


@dataclass
class ModelConfig:
    """Bundle persisted in checkpoints and read from config files."""

    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def to_dict(self) -> dict:
        return {"model": self.generator.to_dict(), "encoder": self.encoder.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        gen = GeneratorConfig.from_dict(d.get("model", {}))
        enc = EncoderConfig.from_dict(d.get("encoder", {}))
        return cls(generator=gen, encoder=enc)


def load_config_file(path: str | Path) -> dict:
    """Read a YAML or JSON config file into a plain dict."""
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        return json.loads(text)
    return yaml.safe_load(text)


def config_from_file(path: str | Path) -> tuple[ModelConfig, LossWeights, LossConfig, TrainConfig]:
    """Build all config objects from one file with model./encoder./loss./train. sections."""
    raw = load_config_file(path) or {}
    model = ModelConfig.from_dict(raw)
    loss_raw = dict(raw.get("loss", {}))
    weights = LossWeights(**{k: loss_raw.pop(k) for k in list(loss_raw)
                             if k.startswith("lambda_")})
    loss = LossConfig(**loss_raw)
    train = TrainConfig(**raw.get("train", {}))
    return model, weights, loss, train
