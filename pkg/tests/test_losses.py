import numpy as np
import pytest
import torch

from sketchstyle import GeneratorConfig, LossConfig, LossWeights, PerceptualExtractor
from sketchstyle.config import ConfigError
from sketchstyle.errors import DimensionError
from sketchstyle.generator import BlockTrace
from sketchstyle.losses import (
    crop_offsets,
    feature_matching,
    global_perceptual,
    l1_loss,
    local_perceptual,
    total_objective,
)


def _rand(shape, seed, dtype=torch.float64):
    g = torch.Generator().manual_seed(seed)
    return torch.rand(*shape, generator=g, dtype=dtype)


# --- independent oracles -------------------------------------------------

def oracle_l1(gt, syn):
    gt = gt.numpy().ravel()
    syn = syn.numpy().ravel()
    total = 0.0
    for i in range(gt.size):
        total += abs(gt[i] - syn[i])
    return total / gt.size


def oracle_perceptual_distance(extractor, a, b):
    """Resize-free naive distance: per-layer channel-normalized squared diffs."""
    fa = [t.numpy() for t in extractor.features(a)]
    fb = [t.numpy() for t in extractor.features(b)]
    total = 0.0
    for la, lb in zip(fa, fb):
        za = la / np.sqrt((la ** 2).sum(axis=1, keepdims=True) + 1e-10)
        zb = lb / np.sqrt((lb ** 2).sum(axis=1, keepdims=True) + 1e-10)
        per_sample = ((za - zb) ** 2).sum(axis=1).mean(axis=(1, 2))
        total += float(per_sample.mean())
    return total


def oracle_global(extractor, gt, syn, size):
    gt_r = torch.nn.functional.interpolate(gt, size=(size, size), mode="bilinear",
                                           align_corners=False)
    syn_r = torch.nn.functional.interpolate(syn, size=(size, size), mode="bilinear",
                                            align_corners=False)
    return oracle_perceptual_distance(extractor, gt_r, syn_r)


def oracle_local(extractor, gt, syn, count, size, seed):
    offsets = crop_offsets(gt.shape[-1], size, count, seed)
    vals = []
    for y, x in offsets:
        vals.append(oracle_perceptual_distance(
            extractor, gt[..., y:y + size, x:x + size],
            syn[..., y:y + size, x:x + size]))
    return sum(vals) / len(vals)


def oracle_fm(gt_trace, syn_trace, levels):
    total = 0.0
    for level in levels:
        a = gt_trace.level(level).numpy()
        b = syn_trace.level(level).numpy()
        total += np.abs(a - b).mean()
    return total / len(levels)


# --- l1 -------------------------------------------------------------------

def test_l1_identity():
    x = _rand((1, 3, 8, 8), 0)
    assert float(l1_loss(x, x)) == 0.0


def test_l1_constant_offset():
    x = _rand((1, 3, 8, 8), 1)
    assert float(l1_loss(x, x + 0.5)) == pytest.approx(0.5, abs=1e-12)


def test_l1_matches_oracle():
    gt, syn = _rand((1, 3, 8, 8), 2), _rand((1, 3, 8, 8), 3)
    assert float(l1_loss(gt, syn)) == pytest.approx(oracle_l1(gt, syn), abs=1e-7)


def test_l1_shape_mismatch():
    with pytest.raises(DimensionError):
        l1_loss(torch.zeros(1, 3, 8, 8), torch.zeros(1, 3, 4, 4))


# --- global perceptual ------------------------------------------------------

def test_global_identity(extractor):
    x = _rand((1, 3, 16, 16), 4)
    assert float(global_perceptual(x, x, extractor, 64)) == 0.0


def test_global_symmetric(extractor):
    a, b = _rand((1, 3, 16, 16), 5), _rand((1, 3, 16, 16), 6)
    d_ab = float(global_perceptual(a, b, extractor, 64))
    d_ba = float(global_perceptual(b, a, extractor, 64))
    assert d_ab == pytest.approx(d_ba, rel=1e-12)
    assert d_ab > 0


def test_global_matches_oracle(extractor):
    gt, syn = _rand((2, 3, 16, 16), 7), _rand((2, 3, 16, 16), 8)
    mine = float(global_perceptual(gt, syn, extractor, 32))
    ref = oracle_global(extractor, gt, syn, 32)
    assert mine == pytest.approx(ref, abs=1e-7)


# --- local perceptual -------------------------------------------------------

def test_local_identity_any_seed(extractor):
    x = _rand((1, 3, 32, 32), 9)
    for seed in (0, 1, 99):
        assert float(local_perceptual(x, x, extractor, 5, 8, seed)) == 0.0


def test_default_patch_count_is_twenty():
    assert LossConfig().patch_count == 20


def test_local_matches_oracle(extractor):
    gt, syn = _rand((1, 3, 32, 32), 10), _rand((1, 3, 32, 32), 11)
    mine = float(local_perceptual(gt, syn, extractor, 20, 8, crop_seed=21))
    ref = oracle_local(extractor, gt, syn, 20, 8, 21)
    assert mine == pytest.approx(ref, abs=1e-7)


def test_patch_larger_than_image_rejected(extractor):
    x = _rand((1, 3, 8, 8), 12)
    with pytest.raises(DimensionError):
        local_perceptual(x, x, extractor, 4, 16, 0)


def test_crop_determinism():
    a = crop_offsets(64, 16, 20, crop_seed=5)
    b = crop_offsets(64, 16, 20, crop_seed=5)
    c = crop_offsets(64, 16, 20, crop_seed=6)
    assert a == b
    assert a != c
    for y, x in a + c:
        assert 0 <= y <= 48 and 0 <= x <= 48


# --- feature matching -------------------------------------------------------

def _trace_pair(seed):
    gt, syn = BlockTrace(), BlockTrace()
    g = torch.Generator().manual_seed(seed)
    for level, res in [(4, 16), (5, 32), (6, 64)]:
        gt.blocks[level] = torch.rand(1, 8, res, res, generator=g, dtype=torch.float64)
        syn.blocks[level] = torch.rand(1, 8, res, res, generator=g, dtype=torch.float64)
    return gt, syn


def test_fm_identity():
    gt, _ = _trace_pair(13)
    assert float(feature_matching(gt, gt, [4, 5, 6])) == 0.0


def test_fm_paper_scale_levels():
    cfg = LossConfig(fm_levels=[6, 7, 8, 9], patch_size=64, global_resize=64)
    paper = GeneratorConfig(max_res=1024, style_dim=512, replacement_res=32,
                            channel_map={r: 8 for r in
                                         [4, 8, 16, 32, 64, 128, 256, 512, 1024]})
    cfg.validate_against(paper)
    assert len(cfg.fm_levels) == 4


def test_fm_levels_must_be_post_replacement():
    cfg = LossConfig(fm_levels=[3, 4])
    with pytest.raises(ConfigError):
        cfg.validate_against(GeneratorConfig())  # replacement level is 3


def test_fm_matches_oracle():
    gt, syn = _trace_pair(14)
    mine = float(feature_matching(gt, syn, [4, 5, 6]))
    assert mine == pytest.approx(oracle_fm(gt, syn, [4, 5, 6]), abs=1e-9)


def test_fm_missing_level():
    gt, syn = _trace_pair(15)
    with pytest.raises(DimensionError):
        feature_matching(gt, syn, [7])


# --- total objective ---------------------------------------------------------

def _total_inputs(seed):
    gt, syn = _rand((1, 3, 32, 32), seed), _rand((1, 3, 32, 32), seed + 1)
    gt_tr, syn_tr = _trace_pair(seed + 2)
    cfg = LossConfig(patch_count=6, patch_size=8, global_resize=32,
                     fm_levels=[4, 5, 6], crop_seed=17)
    return gt, syn, gt_tr, syn_tr, cfg


def test_total_l1_only(extractor):
    gt, syn, gt_tr, syn_tr, cfg = _total_inputs(16)
    weights = LossWeights(lambda_l1=1.0, lambda_gp=0.0, lambda_lp=0.0, lambda_fm=0.0)
    total, breakdown = total_objective(gt, syn, gt_tr, syn_tr, weights, cfg, extractor)
    assert torch.equal(total, l1_loss(gt, syn))
    assert breakdown["global"] == 0.0 and breakdown["local"] == 0.0


def test_total_identity_is_zero(extractor):
    gt, _, gt_tr, _, cfg = _total_inputs(18)
    total, _ = total_objective(gt, gt, gt_tr, gt_tr, LossWeights(), cfg, extractor)
    assert float(total) == 0.0


def test_total_matches_weighted_oracles(extractor):
    gt, syn, gt_tr, syn_tr, cfg = _total_inputs(20)
    weights = LossWeights(lambda_l1=0.7, lambda_gp=1.3, lambda_lp=0.5, lambda_fm=2.0)
    total, breakdown = total_objective(gt, syn, gt_tr, syn_tr, weights, cfg, extractor)
    ref = (0.7 * oracle_l1(gt, syn)
           + 1.3 * oracle_global(extractor, gt, syn, cfg.global_resize)
           + 0.5 * oracle_local(extractor, gt, syn, cfg.patch_count,
                                cfg.patch_size, cfg.crop_seed)
           + 2.0 * oracle_fm(gt_tr, syn_tr, cfg.fm_levels))
    assert float(total) == pytest.approx(ref, abs=1e-7)
    assert breakdown["total"] == pytest.approx(ref, abs=1e-6)


def test_ablation_bitwise_exact(extractor):
    gt, syn, gt_tr, syn_tr, cfg = _total_inputs(22)
    zeroed = LossWeights(lambda_l1=1.0, lambda_gp=0.0, lambda_lp=1.0, lambda_fm=1.0)
    total_a, _ = total_objective(gt, syn, gt_tr, syn_tr, zeroed, cfg, extractor)
    # recompute without the term at all
    ref = (1.0 * l1_loss(gt, syn)
           + 1.0 * local_perceptual(gt, syn, extractor, cfg.patch_count,
                                    cfg.patch_size, cfg.crop_seed)
           + 1.0 * feature_matching(gt_tr, syn_tr, cfg.fm_levels))
    assert torch.equal(total_a, ref)


def test_zero_weights_rejected():
    with pytest.raises(ConfigError):
        LossWeights(lambda_l1=0.0, lambda_gp=0.0, lambda_lp=0.0, lambda_fm=0.0)


# --- gradient checks ---------------------------------------------------------

def finite_diff_grad(fn, x, eps=1e-4):
    grad = torch.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.numel()):
        orig = float(flat[i])
        flat[i] = orig + eps
        f_plus = float(fn())
        flat[i] = orig - eps
        f_minus = float(fn())
        flat[i] = orig
        gflat[i] = (f_plus - f_minus) / (2 * eps)
    return grad


def check_gradient(loss_fn, syn):
    syn_var = syn.clone().requires_grad_(True)
    loss = loss_fn(syn_var)
    loss.backward()
    analytic = syn_var.grad.clone()
    probe = syn.clone()
    numeric = finite_diff_grad(lambda: loss_fn(probe), probe)
    denom = max(float(numeric.norm()), 1e-12)
    rel = float((analytic - numeric).norm()) / denom
    assert rel <= 1e-3, f"relative gradient error {rel}"


@pytest.fixture(scope="module")
def grad_extractor():
    return PerceptualExtractor(seed=23)


def _toy_pair(seed):
    g = torch.Generator().manual_seed(seed)
    gt = torch.rand(1, 3, 4, 4, generator=g, dtype=torch.float64)
    syn = (gt + 0.3 + 0.2 * torch.rand(1, 3, 4, 4, generator=g, dtype=torch.float64))
    return gt, syn


def test_gradient_l1():
    gt, syn = _toy_pair(30)
    check_gradient(lambda s: l1_loss(gt, s), syn)


def test_gradient_global(grad_extractor):
    gt, syn = _toy_pair(31)
    check_gradient(lambda s: global_perceptual(gt, s, grad_extractor, 16), syn)


def test_gradient_local(grad_extractor):
    gt, syn = _toy_pair(32)
    check_gradient(
        lambda s: local_perceptual(gt, s, grad_extractor, 4, 2, crop_seed=7), syn)


def test_gradient_feature_matching():
    g = torch.Generator().manual_seed(33)
    gt_tr, syn_tr = BlockTrace(), BlockTrace()
    gt_tr.blocks[2] = torch.rand(1, 4, 4, 4, generator=g, dtype=torch.float64)
    base = torch.rand(1, 4, 4, 4, generator=g, dtype=torch.float64) + 0.5

    def fm_of(tensor):
        tr = BlockTrace()
        tr.blocks[2] = tensor
        return feature_matching(gt_tr, tr, [2])

    check_gradient(fm_of, base)
