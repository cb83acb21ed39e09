"""Sketch- and semantic-map-conditioned portrait synthesis toolkit."""

from .config import (
    EncoderConfig,
    GeneratorConfig,
    LabelSchema,
    LossConfig,
    LossWeights,
    ModelConfig,
    TrainConfig,
)
from .encoder import ConditionEncoder, ConditionPair
from .generator import BlockTrace, Generator, IntermediatePair, StyleCode
from .model import ConditionalModel
from .perceptual import PerceptualExtractor

__all__ = [
    "BlockTrace",
    "ConditionalModel",
    "ConditionEncoder",
    "ConditionPair",
    "EncoderConfig",
    "Generator",
    "GeneratorConfig",
    "IntermediatePair",
    "LabelSchema",
    "LossConfig",
    "LossWeights",
    "ModelConfig",
    "PerceptualExtractor",
    "StyleCode",
    "TrainConfig",
]
