"""The four training objective terms and their weighted combination."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from .config import LossConfig, LossWeights
from .errors import DimensionError
from .generator import BlockTrace
from .perceptual import PerceptualExtractor


def _check_same_shape(gt: torch.Tensor, syn: torch.Tensor):
    if gt.shape != syn.shape:
        raise DimensionError(f"shape mismatch {tuple(gt.shape)} vs {tuple(syn.shape)}")


def l1_loss(gt: torch.Tensor, syn: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference over all elements."""
    _check_same_shape(gt, syn)
    return (gt - syn).abs().mean()


def _as_batch(x: torch.Tensor) -> torch.Tensor:
    return x.unsqueeze(0) if x.ndim == 3 else x


def global_perceptual(gt: torch.Tensor, syn: torch.Tensor,
                      extractor: PerceptualExtractor, global_resize: int = 64) -> torch.Tensor:
    """Perceptual distance after resizing both images to global_resize^2."""
    _check_same_shape(gt, syn)
    gt, syn = _as_batch(gt), _as_batch(syn)
    size = (global_resize, global_resize)
    gt_r = F.interpolate(gt, size=size, mode="bilinear", align_corners=False)
    syn_r = F.interpolate(syn, size=size, mode="bilinear", align_corners=False)
    return extractor.distance(gt_r, syn_r)


def crop_offsets(image_size: int, patch_size: int, count: int,
                 crop_seed: int) -> list[tuple[int, int]]:
    """Seeded top-left corners for the local patches; always in-bounds."""
    if patch_size > image_size:
        raise DimensionError(f"patch {patch_size} larger than image {image_size}")
    rng = np.random.default_rng(crop_seed)
    hi = image_size - patch_size + 1
    return [tuple(rng.integers(0, hi, size=2)) for _ in range(count)]


def local_perceptual(gt: torch.Tensor, syn: torch.Tensor,
                     extractor: PerceptualExtractor, patch_count: int = 20,
                     patch_size: int = 16, crop_seed: int = 0) -> torch.Tensor:
    """Average perceptual distance over seeded crops taken from both images."""
    _check_same_shape(gt, syn)
    gt, syn = _as_batch(gt), _as_batch(syn)
    offsets = crop_offsets(gt.shape[-1], patch_size, patch_count, crop_seed)
    gt_patches = torch.cat([gt[..., y:y + patch_size, x:x + patch_size]
                            for y, x in offsets], dim=0)
    syn_patches = torch.cat([syn[..., y:y + patch_size, x:x + patch_size]
                             for y, x in offsets], dim=0)
    return extractor.distance(gt_patches, syn_patches)


def feature_matching(gt_trace: BlockTrace, syn_trace: BlockTrace,
                     fm_levels: list[int]) -> torch.Tensor:
    """Mean absolute block-output difference averaged over the given levels."""
    total = None
    for level in fm_levels:
        a, b = gt_trace.level(level), syn_trace.level(level)
        _check_same_shape(a, b)
        d = (a - b).abs().mean()
        total = d if total is None else total + d
    return total / len(fm_levels)


def total_objective(gt: torch.Tensor, syn: torch.Tensor,
                    gt_trace: BlockTrace | None, syn_trace: BlockTrace | None,
                    weights: LossWeights, loss_config: LossConfig,
                    extractor: PerceptualExtractor,
                    crop_seed: int | None = None) -> tuple[torch.Tensor, dict[str, float]]:
    """Weighted sum of the four terms with a per-term breakdown.

    A zero weight removes its term from the computation entirely, so an
    ablated total is bitwise equal to the sum recomputed without that term.
    """
    seed = loss_config.crop_seed if crop_seed is None else crop_seed
    total = gt.new_zeros(())
    breakdown: dict[str, float] = {}

    def add(name: str, weight: float, fn):
        nonlocal total
        if weight > 0:
            term = fn()
            breakdown[name] = float(term.detach())
            total = total + weight * term
        else:
            breakdown[name] = 0.0

    add("l1", weights.lambda_l1, lambda: l1_loss(gt, syn))
    add("global", weights.lambda_gp,
        lambda: global_perceptual(gt, syn, extractor, loss_config.global_resize))
    add("local", weights.lambda_lp,
        lambda: local_perceptual(gt, syn, extractor, loss_config.patch_count,
                                 loss_config.patch_size, seed))
    add("fm", weights.lambda_fm,
        lambda: feature_matching(gt_trace, syn_trace, loss_config.fm_levels))
    breakdown["total"] = float(total.detach())
    return total, breakdown
