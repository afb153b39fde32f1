import numpy as np
import pytest

from freqscale import LatentTensor


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20250810)


def random_tensor(rng: np.random.Generator, height: int, width: int, channels: int = 1) -> LatentTensor:
    return LatentTensor(rng.standard_normal((channels, height, width)))


def random_f32_tensor(rng: np.random.Generator, height: int, width: int, channels: int = 1) -> LatentTensor:
    values = rng.standard_normal((channels, height, width)).astype(np.float32)
    return LatentTensor(values.astype(np.float64))
