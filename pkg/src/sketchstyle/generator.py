"""Frozen style-based generator with a traceable intermediate injection point.

The synthesis network follows the skip architecture: each resolution level
upsamples, applies two style-modulated convolutions, and adds an RGB
projection onto the 2x-upsampled running image. Level 4 starts from a
learned constant and has a single styled conv. Style rows are consumed in
the order the layers run, with each level's RGB projection sharing its row
with the next level's first conv (see GeneratorConfig).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .config import GeneratorConfig
from .errors import CorruptionError, DimensionError


@dataclass
class StyleCode:
    """Per-layer style matrix with its high/low split point."""

    values: torch.Tensor  # (L, D)
    split_index: int

    def __post_init__(self):
        if self.values.ndim != 2:
            raise DimensionError(f"style matrix must be 2-D, got {tuple(self.values.shape)}")
        if not 0 < self.split_index < self.values.shape[0]:
            raise DimensionError("split_index must be inside the row range")

    @property
    def high(self) -> torch.Tensor:
        return self.values[: self.split_index]

    @property
    def low(self) -> torch.Tensor:
        return self.values[self.split_index:]

    @classmethod
    def from_parts(cls, high: torch.Tensor, low: torch.Tensor) -> "StyleCode":
        return cls(values=torch.cat([high, low], dim=0), split_index=high.shape[0])


@dataclass
class IntermediatePair:
    """Generator state at the replacement resolution: feature map + RGB skip."""

    feature: torch.Tensor  # (C_r, r, r) or (B, C_r, r, r)
    image: torch.Tensor    # (3, r, r) or (B, 3, r, r)

    def check(self, config: GeneratorConfig):
        r = config.replacement_res
        c = config.channel_map[r]
        if self.feature.shape[-3:] != (c, r, r):
            raise DimensionError(
                f"feature shape {tuple(self.feature.shape)} != (*, {c}, {r}, {r})")
        if self.image.shape[-3:] != (config.rgb_channels, r, r):
            raise DimensionError(
                f"image shape {tuple(self.image.shape)} != (*, {config.rgb_channels}, {r}, {r})")
        if not (torch.isfinite(self.feature).all() and torch.isfinite(self.image).all()):
            raise CorruptionError("intermediate tensors contain non-finite values")


class BlockTrace:
    """Per-level conv outputs recorded during synthesis.

    Keyed by log2 of the level's resolution, matching how feature-matching
    levels are specified.
    """

    def __init__(self):
        self.blocks: dict[int, torch.Tensor] = {}
        self.intermediate: IntermediatePair | None = None

    def level(self, log2_res: int) -> torch.Tensor:
        if log2_res not in self.blocks:
            raise DimensionError(f"trace has no level {log2_res} "
                                 f"(available: {sorted(self.blocks)})")
        return self.blocks[log2_res]


class EqualizedLinear(nn.Module):
    """Linear layer with runtime weight scaling (unit-variance init)."""

    def __init__(self, in_dim: int, out_dim: int, bias_init: float = 0.0,
                 g: torch.Generator | None = None):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(out_dim, in_dim, generator=g))
        self.bias = nn.Parameter(torch.full((out_dim,), float(bias_init)))
        self.scale = 1.0 / math.sqrt(in_dim)

    def forward(self, x):
        return F.linear(x, self.weight * self.scale, self.bias)


class ModulatedConv2d(nn.Module):
    """3x3 (or 1x1) conv whose weights are modulated per-sample by a style row."""

    def __init__(self, in_ch: int, out_ch: int, style_dim: int, kernel: int = 3,
                 demodulate: bool = True, g: torch.Generator | None = None):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(out_ch, in_ch, kernel, kernel, generator=g))
        self.scale = 1.0 / math.sqrt(in_ch * kernel * kernel)
        self.affine = EqualizedLinear(style_dim, in_ch, bias_init=1.0, g=g)
        self.demodulate = demodulate
        self.padding = kernel // 2

    def forward(self, x: torch.Tensor, style_row: torch.Tensor) -> torch.Tensor:
        b, in_ch, h, w = x.shape
        out_ch = self.weight.shape[0]
        mod = self.affine(style_row)  # (B, in_ch)
        weight = self.scale * self.weight.unsqueeze(0) * mod.view(b, 1, in_ch, 1, 1)
        if self.demodulate:
            denom = torch.rsqrt(weight.pow(2).sum(dim=(2, 3, 4)) + 1e-8)
            weight = weight * denom.view(b, out_ch, 1, 1, 1)
        x = x.reshape(1, b * in_ch, h, w)
        weight = weight.reshape(b * out_ch, in_ch, *self.weight.shape[2:])
        out = F.conv2d(x, weight, padding=self.padding, groups=b)
        return out.reshape(b, out_ch, h, w)


class StyledConv(nn.Module):
    """Modulated conv followed by bias and gained leaky ReLU."""

    def __init__(self, in_ch: int, out_ch: int, style_dim: int,
                 g: torch.Generator | None = None):
        super().__init__()
        self.conv = ModulatedConv2d(in_ch, out_ch, style_dim, kernel=3, g=g)
        self.bias = nn.Parameter(torch.zeros(out_ch))
        self.gain = math.sqrt(2.0)

    def forward(self, x, style_row):
        x = self.conv(x, style_row) + self.bias.view(1, -1, 1, 1)
        return F.leaky_relu(x, 0.2) * self.gain


class ToRGB(nn.Module):
    """Modulated 1x1 projection to RGB, no demodulation."""

    def __init__(self, in_ch: int, rgb_channels: int, style_dim: int,
                 g: torch.Generator | None = None):
        super().__init__()
        self.conv = ModulatedConv2d(in_ch, rgb_channels, style_dim, kernel=1,
                                    demodulate=False, g=g)
        self.bias = nn.Parameter(torch.zeros(rgb_channels))

    def forward(self, x, style_row):
        return self.conv(x, style_row) + self.bias.view(1, -1, 1, 1)


def _upsample2(x: torch.Tensor) -> torch.Tensor:
    return F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)


class MappingNetwork(nn.Module):
    """Latent -> style vector MLP with input normalization."""

    def __init__(self, style_dim: int, depth: int = 2, g: torch.Generator | None = None):
        super().__init__()
        self.layers = nn.ModuleList(
            [EqualizedLinear(style_dim, style_dim, g=g) for _ in range(depth)])

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        z = z * torch.rsqrt(z.pow(2).mean(dim=-1, keepdim=True) + 1e-8)
        for layer in self.layers:
            z = F.leaky_relu(layer(z), 0.2)
        return z


class Generator(nn.Module):
    """Style-based synthesis network plus its mapping network."""

    def __init__(self, config: GeneratorConfig, seed: int = 0):
        super().__init__()
        self.config = config
        g = torch.Generator().manual_seed(seed)
        cm = config.channel_map
        res_list = config.resolutions
        D = config.style_dim

        self.mapping = MappingNetwork(D, g=g)
        self.const = nn.Parameter(torch.randn(1, cm[4], 4, 4, generator=g))

        convs: list[nn.ModuleList] = []
        rgbs: list[ToRGB] = []
        for i, res in enumerate(res_list):
            in_ch = cm[res_list[i - 1]] if i > 0 else cm[4]
            out_ch = cm[res]
            if i == 0:
                level_convs = nn.ModuleList([StyledConv(in_ch, out_ch, D, g=g)])
            else:
                level_convs = nn.ModuleList([
                    StyledConv(in_ch, out_ch, D, g=g),
                    StyledConv(out_ch, out_ch, D, g=g),
                ])
            convs.append(level_convs)
            rgbs.append(ToRGB(out_ch, config.rgb_channels, D, g=g))
        self.convs = nn.ModuleList(convs)
        self.rgbs = nn.ModuleList(rgbs)

    # -- style handling ----------------------------------------------------

    def sample_codes(self, n: int, seed: int) -> torch.Tensor:
        """Draw n style matrices by mapping normal latents; returns (n, L, D)."""
        g = torch.Generator().manual_seed(seed)
        z = torch.randn(n, self.config.style_dim, generator=g)
        with torch.no_grad():
            w = self.mapping(z)
        return w.unsqueeze(1).expand(n, self.config.num_styles, -1).contiguous()

    def _check_code(self, code: torch.Tensor) -> torch.Tensor:
        if code.ndim == 2:
            code = code.unsqueeze(0)
        if code.ndim != 3 or code.shape[1] != self.config.num_styles \
                or code.shape[2] != self.config.style_dim:
            raise DimensionError(
                f"style code shape {tuple(code.shape)} != "
                f"(*, {self.config.num_styles}, {self.config.style_dim})")
        return code

    def check_finite(self):
        for name, p in self.named_parameters():
            if not torch.isfinite(p).all():
                raise CorruptionError(f"non-finite weights in {name}")

    # -- synthesis ---------------------------------------------------------

    def synthesize(self, code: torch.Tensor, trace: bool = False):
        """Full unconditional synthesis from a (B, L, D) or (L, D) style matrix.

        Returns the image in [-1, 1]; with trace=True also returns the
        BlockTrace holding per-level conv outputs and the intermediate pair
        observed at the replacement resolution.
        """
        self.check_finite()
        code = self._check_code(code)
        cfg = self.config
        rec = BlockTrace() if trace else None

        x = self.const.expand(code.shape[0], -1, -1, -1)
        skip = None
        for i in range(cfg.replacement_level + 1):
            if i > 0:
                x = _upsample2(x)
            for conv, row in zip(self.convs[i], cfg.conv_rows(i)):
                x = conv(x, code[:, row])
            rgb = self.rgbs[i](x, code[:, cfg.rgb_row(i)])
            skip = rgb if skip is None else _upsample2(skip) + rgb
            if rec is not None:
                rec.blocks[int(math.log2(cfg.resolutions[i]))] = x
        if rec is not None:
            rec.intermediate = IntermediatePair(feature=x, image=skip)
        out = self._tail(x, skip, code, record=rec)
        return (out, rec) if trace else out

    def _tail(self, feature: torch.Tensor, image: torch.Tensor,
              code: torch.Tensor, record: BlockTrace | None = None) -> torch.Tensor:
        """Run the post-replacement levels from an intermediate pair.

        Shared by unconditional synthesis, injection, and the conditional
        path, so an injected trace reproduces the unconditional output
        bit for bit.
        """
        cfg = self.config
        x, skip = feature, image
        for i in range(cfg.replacement_level + 1, cfg.num_levels):
            x = _upsample2(x)
            for conv, row in zip(self.convs[i], cfg.conv_rows(i)):
                x = conv(x, code[:, row])
            skip = _upsample2(skip) + self.rgbs[i](x, code[:, cfg.rgb_row(i)])
            if record is not None:
                record.blocks[int(math.log2(cfg.resolutions[i]))] = x
        return torch.tanh(skip)

    def synthesize_tail(self, pair: IntermediatePair, low: torch.Tensor,
                        trace: bool = False):
        """Synthesize from an injected intermediate pair and low style rows.

        `low` is (low_count, D) or (B, low_count, D); high rows are never
        consumed past the replacement point, so they are zero-filled.
        """
        self.check_finite()
        cfg = self.config
        if low.ndim == 2:
            low = low.unsqueeze(0)
        if low.shape[1] != cfg.low_style_count or low.shape[2] != cfg.style_dim:
            raise DimensionError(
                f"low style shape {tuple(low.shape)} != "
                f"(*, {cfg.low_style_count}, {cfg.style_dim})")
        pair.check(cfg)
        feature, image = pair.feature, pair.image
        if feature.ndim == 3:
            feature = feature.unsqueeze(0)
        if image.ndim == 3:
            image = image.unsqueeze(0)
        if feature.shape[0] != low.shape[0] or image.shape[0] != low.shape[0]:
            raise DimensionError("batch sizes of pair and low styles differ")
        high = torch.zeros(low.shape[0], cfg.high_style_count, cfg.style_dim,
                           dtype=low.dtype, device=low.device)
        code = torch.cat([high, low], dim=1)
        rec = BlockTrace() if trace else None
        out = self._tail(feature, image, code, record=rec)
        return (out, rec) if trace else out
