"""Condition encoding network: sketch + label rasters -> intermediate pair.

Sketch and semantic-map branches encode independently with one stride-2
block each, concatenate on channels, and a shared trunk of further stride-2
blocks brings the merged map down to the replacement resolution. Two
residual heads then produce the feature map and the RGB intermediate that
get injected into the frozen generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .config import ConfigError, EncoderConfig, GeneratorConfig
from .errors import DimensionError
from .generator import IntermediatePair


@dataclass
class ConditionPair:
    """Sketch raster in [0,1] (1 = stroke) plus integer label raster."""

    sketch: torch.Tensor  # (1, H, W) or (B, 1, H, W)
    labels: torch.Tensor  # (H, W) or (B, H, W), integer

    def batched(self) -> tuple[torch.Tensor, torch.Tensor]:
        sketch, labels = self.sketch, self.labels
        if sketch.ndim == 3:
            sketch = sketch.unsqueeze(0)
        if labels.ndim == 2:
            labels = labels.unsqueeze(0)
        if sketch.ndim != 4 or sketch.shape[1] != 1:
            raise DimensionError(f"sketch shape {tuple(self.sketch.shape)} != (*, 1, H, W)")
        if labels.ndim != 3:
            raise DimensionError(f"labels shape {tuple(self.labels.shape)} != (*, H, W)")
        if sketch.shape[-2:] != labels.shape[-2:] or sketch.shape[0] != labels.shape[0]:
            raise DimensionError("sketch and labels disagree on batch or raster size")
        return sketch, labels

    def check(self, cond_res: int, num_labels: int):
        sketch, labels = self.batched()
        if sketch.shape[-2:] != (cond_res, cond_res):
            raise DimensionError(
                f"condition raster is {tuple(sketch.shape[-2:])}, expected "
                f"({cond_res}, {cond_res})")
        if labels.numel() and int(labels.max()) >= num_labels:
            raise DimensionError(f"label id {int(labels.max())} outside schema "
                                 f"(num_labels={num_labels})")


def _norm(kind: str, channels: int) -> nn.Module:
    if kind == "instance":
        return nn.InstanceNorm2d(channels, affine=True)
    return nn.Identity()


class DownBlock(nn.Module):
    """One stride-2 conv, leaky ReLU, normalization."""

    def __init__(self, in_ch: int, out_ch: int, norm_kind: str):
        super().__init__()
        self.conv = nn.Conv2d(in_ch, out_ch, 3, stride=2, padding=1)
        self.norm = _norm(norm_kind, out_ch)

    def forward(self, x):
        return self.norm(F.leaky_relu(self.conv(x), 0.2))


class ResBlock(nn.Module):
    """Channel-preserving residual block of two 3x3 convs."""

    def __init__(self, channels: int, norm_kind: str):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.norm1 = _norm(norm_kind, channels)
        self.norm2 = _norm(norm_kind, channels)

    def forward(self, x):
        h = self.norm1(F.leaky_relu(self.conv1(x), 0.2))
        h = self.norm2(self.conv2(h))
        return F.leaky_relu(x + h, 0.2)


class ConditionEncoder(nn.Module):
    """Maps a ConditionPair to the IntermediatePair shapes of a generator config."""

    def __init__(self, enc_config: EncoderConfig, gen_config: GeneratorConfig,
                 seed: int = 0):
        super().__init__()
        self.enc_config = enc_config
        self.gen_config = gen_config
        r = gen_config.replacement_res
        if enc_config.cond_res < 2 * r:
            raise ConfigError(
                f"cond_res {enc_config.cond_res} not reducible to {r} by stride-2 steps")
        steps_total = int(math.log2(enc_config.cond_res // r))

        branch_out = enc_config.branch_out_channels
        if enc_config.modality != "both":
            branch_out *= 2  # keep the merged trunk width constant
        norm = enc_config.norm_kind

        if enc_config.modality in ("both", "sketch"):
            self.sketch_branch = DownBlock(1, branch_out, norm)
        else:
            self.sketch_branch = None
        if enc_config.modality in ("both", "mask"):
            self.label_branch = DownBlock(enc_config.num_labels, branch_out, norm)
        else:
            self.label_branch = None

        merged = enc_config.merged_channels
        target = gen_config.channel_map[r]
        trunk = []
        ch = merged
        for k in range(steps_total - 1):
            nxt = target if k == steps_total - 2 else max(merged, target // 2)
            trunk.append(DownBlock(ch, nxt, norm))
            ch = nxt
        if not trunk:  # single stride-2 step overall: branches already landed at r
            trunk.append(nn.Conv2d(merged, target, 3, padding=1))
            ch = target
        self.trunk = nn.Sequential(*trunk)

        self.feature_head = nn.Sequential(
            *[ResBlock(ch, norm) for _ in range(enc_config.feature_head_blocks)])
        self.image_head = nn.Sequential(
            *[ResBlock(ch, norm) for _ in range(enc_config.image_head_blocks)],
            nn.Conv2d(ch, gen_config.rgb_channels, 3, padding=1))

        self._seed_init(seed)

    def _seed_init(self, seed: int):
        g = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for name, p in self.named_parameters():
                if p.ndim > 1:
                    fan_in = p[0].numel()
                    p.copy_(torch.randn(p.shape, generator=g) / math.sqrt(fan_in))
                elif "norm" in name and name.endswith("weight"):
                    p.fill_(1.0)
                else:
                    p.zero_()

    def forward(self, cond: ConditionPair) -> IntermediatePair:
        cfg = self.enc_config
        cond.check(cfg.cond_res, cfg.num_labels)
        sketch, labels = cond.batched()
        onehot = F.one_hot(labels.long(), cfg.num_labels).permute(0, 3, 1, 2).float()

        parts = []
        if self.sketch_branch is not None:
            parts.append(self.sketch_branch(sketch.float()))
        if self.label_branch is not None:
            parts.append(self.label_branch(onehot))
        x = torch.cat(parts, dim=1) if len(parts) > 1 else parts[0]
        x = self.trunk(x)
        return IntermediatePair(feature=self.feature_head(x), image=self.image_head(x))
