import pytest
import torch

from sketchstyle import (
    ConditionalModel,
    ConditionPair,
    EncoderConfig,
    Generator,
    GeneratorConfig,
    PerceptualExtractor,
)


@pytest.fixture(scope="session")
def desk_config() -> GeneratorConfig:
    return GeneratorConfig()


@pytest.fixture(scope="session")
def generator(desk_config) -> Generator:
    return Generator(desk_config, seed=0)


@pytest.fixture(scope="session")
def model(desk_config) -> ConditionalModel:
    m = ConditionalModel(desk_config, EncoderConfig(), seed=0)
    m.freeze()
    return m


@pytest.fixture(scope="session")
def extractor() -> PerceptualExtractor:
    return PerceptualExtractor(seed=11)


def make_condition(seed: int, batch: int = 1, res: int = 64,
                   num_labels: int = 10) -> ConditionPair:
    g = torch.Generator().manual_seed(seed)
    sketch = (torch.rand(batch, 1, res, res, generator=g) > 0.9).float()
    labels = torch.randint(0, num_labels, (batch, res, res), generator=g)
    return ConditionPair(sketch=sketch, labels=labels)
