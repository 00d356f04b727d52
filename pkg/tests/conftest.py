import os

# File handlers off before any RunLogger is created
os.environ["OVAINN_LOG_DIR"] = ""
os.environ.setdefault("OVAINN_LOG_LEVEL", "WARNING")

import numpy as np
import pytest

from src.models import ActivationKind, LabeledVectors
from src.flowcore import init_net
from src.numkit import Rng


def make_clusters(n_classes: int = 3, dim: int = 4, per_class: int = 30,
                  spread: float = 0.1, scale: float = 5.0, seed: int = 0) -> LabeledVectors:
    """Gaussian blobs, class c centred at scale·e_c (scaled simplex corners)"""
    gen = np.random.default_rng(seed)
    vectors, labels = [], []
    for c in range(n_classes):
        mean = np.zeros(dim)
        mean[c % dim] = scale
        vectors.append(mean + spread * gen.standard_normal((per_class, dim)))
        labels.append(np.full(per_class, c))
    return LabeledVectors(dim=dim, vectors=np.vstack(vectors), labels=np.concatenate(labels))


@pytest.fixture
def clusters():
    return make_clusters()


@pytest.fixture
def tanh_net():
    net, _ = init_net(8, 4, 2, ActivationKind.TANH, Rng(7))
    return net


@pytest.fixture
def gen():
    return np.random.default_rng(1234)
