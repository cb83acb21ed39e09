"""Reconstruction metrics: Frechet distance, SSIM, PSNR, feature statistics.

The Frechet distance runs over the project's seeded feature extractor, so
its absolute values are comparable only within this artifact; all outputs
label the column "desk-FID".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .errors import DimensionError
from .perceptual import PerceptualExtractor

PSNR_CAP = 99.0


@dataclass
class DistributionStats:
    mu: np.ndarray     # (d,)
    sigma: np.ndarray  # (d, d), symmetric PSD up to rounding

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.mu.ndim != 1 or self.sigma.shape != (self.mu.size, self.mu.size):
            raise DimensionError("stats dims inconsistent")
        if not np.allclose(self.sigma, self.sigma.T, atol=1e-8):
            raise DimensionError("covariance must be symmetric")


def feature_stats(images: torch.Tensor, extractor: PerceptualExtractor) -> DistributionStats:
    """Mean and unbiased covariance of pooled extractor features."""
    if images.ndim != 4 or images.shape[0] < 2:
        raise DimensionError("need a (N, C, H, W) batch with N >= 2")
    with torch.no_grad():
        feats = extractor.pooled(images).double().cpu().numpy()
    mu = feats.mean(axis=0)
    sigma = np.cov(feats, rowvar=False, ddof=1)
    sigma = np.atleast_2d(sigma)
    sigma = 0.5 * (sigma + sigma.T)
    return DistributionStats(mu=mu, sigma=sigma)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def compute_fid(stats_a: DistributionStats, stats_b: DistributionStats) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

    The matrix square root trace is evaluated through the symmetric product
    A^(1/2) B A^(1/2), whose eigenvalues are clamped at zero, keeping the
    result real and nonnegative.
    """
    if stats_a.mu.shape != stats_b.mu.shape:
        raise DimensionError("feature dims differ")
    diff = stats_a.mu - stats_b.mu
    a_half = _psd_sqrt(stats_a.sigma)
    inner = a_half @ stats_b.sigma @ a_half
    inner = 0.5 * (inner + inner.T)
    vals = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    tr_sqrt = float(np.sqrt(vals).sum())
    fid = float(diff @ diff + np.trace(stats_a.sigma) + np.trace(stats_b.sigma)
                - 2.0 * tr_sqrt)
    if fid < -1e-6:
        raise ValueError(f"Frechet distance collapsed below tolerance: {fid}")
    return max(fid, 0.0)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    half = (size - 1) / 2
    coords = np.arange(size) - half
    g = np.exp(-(coords ** 2) / (2 * sigma ** 2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def compute_ssim(a: torch.Tensor | np.ndarray, b: torch.Tensor | np.ndarray,
                 window_size: int = 11, sigma: float = 1.5,
                 k1: float = 0.01, k2: float = 0.03, data_range: float = 1.0) -> float:
    """Mean local SSIM with a Gaussian window, averaged over channels.

    Inputs are (C, H, W) or (H, W) arrays on a [0, data_range] scale; the
    SSIM map is evaluated on the valid (fully overlapping) window region.
    """
    a = np.asarray(a.detach().cpu() if isinstance(a, torch.Tensor) else a, dtype=np.float64)
    b = np.asarray(b.detach().cpu() if isinstance(b, torch.Tensor) else b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[None], b[None]
    kernel = _gaussian_window(window_size, sigma)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2

    ka = torch.from_numpy(kernel).view(1, 1, window_size, window_size)
    def filt(x: np.ndarray) -> np.ndarray:
        t = torch.from_numpy(x).unsqueeze(1)  # (C, 1, H, W)
        return torch.nn.functional.conv2d(t, ka).squeeze(1).numpy()

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b
    ssim_map = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / \
               ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2))
    return float(ssim_map.mean())


def compute_psnr(a: torch.Tensor | np.ndarray, b: torch.Tensor | np.ndarray,
                 max_value: float = 1.0) -> float:
    """10 log10(max^2 / MSE); identical inputs report the 99.0 sentinel."""
    a = np.asarray(a.detach().cpu() if isinstance(a, torch.Tensor) else a, dtype=np.float64)
    b = np.asarray(b.detach().cpu() if isinstance(b, torch.Tensor) else b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(float(10.0 * np.log10(max_value ** 2 / mse)), PSNR_CAP)
