"""Fixed multi-scale feature pyramid used as the perceptual measuring function.

A seeded, never-trained stack of 3x3 convolutions with leaky activations,
downsampled between stages. Distances are computed LPIPS-style: per-stage
features are unit-normalized along channels, squared differences are summed
over channels, averaged over space, and summed across stages with unit
per-stage weights. The weights live in buffers so no optimizer can touch
them; gradients still flow to the inputs.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .errors import DimensionError


class PerceptualExtractor(nn.Module):

    def __init__(self, seed: int = 0, channels: tuple[int, ...] = (8, 16, 24, 32),
                 in_channels: int = 3):
        super().__init__()
        g = torch.Generator().manual_seed(seed)
        self.num_stages = len(channels)
        prev = in_channels
        for i, ch in enumerate(channels):
            w = torch.randn(ch, prev, 3, 3, generator=g) / (prev * 9) ** 0.5
            self.register_buffer(f"weight_{i}", w)
            prev = ch
        self.out_dim = channels[-1]

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        """Raw per-stage feature maps for a (B, C, H, W) batch."""
        if x.ndim != 4:
            raise DimensionError(f"expected (B, C, H, W), got {tuple(x.shape)}")
        feats = []
        for i in range(self.num_stages):
            w = getattr(self, f"weight_{i}").to(x.dtype)
            x = F.leaky_relu(F.conv2d(x, w, padding=1), 0.2)
            feats.append(x)
            if min(x.shape[-2:]) >= 2:
                x = F.avg_pool2d(x, 2)
        return feats

    def distance(self, a: torch.Tensor, b: torch.Tensor,
                 reduce: str = "mean") -> torch.Tensor:
        """Perceptual distance between two batches; 0 iff features agree."""
        if a.shape != b.shape:
            raise DimensionError(f"shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")
        total = None
        for fa, fb in zip(self.features(a), self.features(b)):
            za = fa * torch.rsqrt(fa.pow(2).sum(dim=1, keepdim=True) + 1e-10)
            zb = fb * torch.rsqrt(fb.pow(2).sum(dim=1, keepdim=True) + 1e-10)
            d = (za - zb).pow(2).sum(dim=1).mean(dim=(1, 2))  # (B,)
            total = d if total is None else total + d
        if reduce == "mean":
            return total.mean()
        return total

    def pooled(self, x: torch.Tensor) -> torch.Tensor:
        """Globally pooled final-stage features, (B, out_dim); the FID front-end."""
        return self.features(x)[-1].mean(dim=(2, 3))
