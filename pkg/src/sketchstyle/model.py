"""Composition of the frozen generator and the trainable condition encoder."""

from __future__ import annotations

import torch
from torch import nn

from .config import EncoderConfig, GeneratorConfig, ModelConfig
from .encoder import ConditionEncoder, ConditionPair
from .generator import BlockTrace, Generator, IntermediatePair, StyleCode


class ConditionalModel(nn.Module):
    """Trainable spatial encoder feeding a frozen style-based generator."""

    def __init__(self, gen_config: GeneratorConfig, enc_config: EncoderConfig,
                 seed: int = 0):
        super().__init__()
        self.generator = Generator(gen_config, seed=seed)
        self.encoder = ConditionEncoder(enc_config, gen_config, seed=seed + 1)

    @property
    def config(self) -> ModelConfig:
        return ModelConfig(generator=self.generator.config,
                           encoder=self.encoder.enc_config)

    def synthesize_conditional(self, cond: ConditionPair, low: torch.Tensor,
                               trace: bool = False):
        pair = self.encoder(cond)
        return self.generator.synthesize_tail(pair, low, trace=trace)

    def partition(self) -> dict[str, list[str]]:
        """Split parameter names into the trainable and frozen sets.

        The generator (every parameter consumed at or after the replacement
        point, plus the pre-replacement blocks used only to synthesize
        targets) is frozen; only the encoder and its heads train.
        """
        frozen = [f"generator.{n}" for n, _ in self.generator.named_parameters()]
        trainable = [f"encoder.{n}" for n, _ in self.encoder.named_parameters()]
        return {"trainable": trainable, "frozen": frozen}

    def freeze(self) -> dict[str, list[str]]:
        """Apply requires_grad per partition; returns the partition."""
        part = self.partition()
        for p in self.generator.parameters():
            p.requires_grad_(False)
        for p in self.encoder.parameters():
            p.requires_grad_(True)
        return part

    def frozen_state_snapshot(self) -> dict[str, torch.Tensor]:
        return {n: p.detach().clone() for n, p in self.generator.named_parameters()}


# Functional surface mirroring the operation contracts.

def synthesize_unconditional(generator: Generator, style: StyleCode | torch.Tensor,
                             trace: bool = False):
    code = style.values if isinstance(style, StyleCode) else style
    return generator.synthesize(code, trace=trace)


def encode_condition(encoder: ConditionEncoder, cond: ConditionPair) -> IntermediatePair:
    return encoder(cond)


def synthesize_conditional(model: ConditionalModel, cond: ConditionPair,
                           low: torch.Tensor, trace: bool = False):
    return model.synthesize_conditional(cond, low, trace=trace)


def inject_intermediates(generator: Generator, pair: IntermediatePair,
                         low: torch.Tensor, trace: bool = False):
    return generator.synthesize_tail(pair, low, trace=trace)


def freeze_post_replacement(model: ConditionalModel) -> dict[str, list[str]]:
    return model.freeze()


__all__ = [
    "BlockTrace", "ConditionalModel", "ConditionPair", "IntermediatePair",
    "StyleCode", "encode_condition", "freeze_post_replacement",
    "inject_intermediates", "synthesize_conditional", "synthesize_unconditional",
]
