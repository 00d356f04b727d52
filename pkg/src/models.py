"""
Base models và data types cho OvA-INN
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Dict, Any, List, Tuple

import numpy as np

from .exceptions import ConfigError, DimensionError


class ActivationKind(Enum):
    """Nonlinearity giữa hai factor A và B của SubNet"""
    RELU = "relu"
    LEAKY_RELU = "leaky_relu"
    TANH = "tanh"
    IDENTITY = "identity"

    @property
    def code(self) -> int:
        """Byte code dùng trong registry file"""
        return _ACTIVATION_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "ActivationKind":
        for kind, value in _ACTIVATION_CODES.items():
            if value == code:
                return kind
        raise ConfigError(f"unknown activation code {code}")

    @classmethod
    def parse(cls, name: str) -> "ActivationKind":
        try:
            return cls(name.strip().lower().replace("-", "_"))
        except ValueError:
            choices = ", ".join(kind.value for kind in cls)
            raise ConfigError(f"unknown activation '{name}' (choose from {choices})")


_ACTIVATION_CODES = {
    ActivationKind.RELU: 0,
    ActivationKind.LEAKY_RELU: 1,
    ActivationKind.TANH: 2,
    ActivationKind.IDENTITY: 3,
}

LEAKY_RELU_SLOPE = 0.01


class EvalMode(Enum):
    """Protocol đánh giá"""
    SINGLE_HEAD = "single_head"   # mọi class đã học đều là candidate
    MULTI_HEAD = "multi_head"     # task id biết trước lúc test

    @classmethod
    def parse(cls, name: str) -> "EvalMode":
        key = name.strip().lower().replace("-", "_")
        aliases = {"single": cls.SINGLE_HEAD, "multi": cls.MULTI_HEAD}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown eval mode '{name}' (single|multi)")


class NormalizationKind(Enum):
    """Input scaling schemes"""
    NONE = "none"
    SCALE_255 = "scale_255"
    AFFINE = "affine"


@dataclass(frozen=True)
class Normalization:
    """Elementwise, class-agnostic input scaling"""
    kind: NormalizationKind = NormalizationKind.NONE
    shift: float = 0.0
    scale: float = 1.0

    def describe(self) -> str:
        if self.kind == NormalizationKind.AFFINE:
            return f"affine:{self.shift:g},{self.scale:g}"
        return self.kind.value


@dataclass
class LabeledVectors:
    """Dataset of (vector, class label) pairs"""
    dim: int
    vectors: np.ndarray          # (N, dim) float64
    labels: np.ndarray           # (N,) int64
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64).reshape(-1, self.dim)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.vectors.shape[0] != self.labels.shape[0]:
            raise DimensionError(
                f"{self.vectors.shape[0]} vectors but {self.labels.shape[0]} labels"
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def classes(self) -> List[int]:
        """Các label có mặt, tăng dần"""
        return [int(c) for c in np.unique(self.labels)]

    def class_counts(self) -> Dict[int, int]:
        values, counts = np.unique(self.labels, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def select(self, mask: np.ndarray) -> "LabeledVectors":
        """Subset theo boolean mask hoặc index array, giữ nguyên thứ tự"""
        return LabeledVectors(
            dim=self.dim,
            vectors=self.vectors[mask],
            labels=self.labels[mask],
            metadata=dict(self.metadata),
        )

    def of_class(self, class_id: int) -> "LabeledVectors":
        return self.select(self.labels == class_id)


@dataclass
class ClassStream:
    """One batch per class, in presentation order"""
    batches: List[Tuple[int, LabeledVectors]]

    def __len__(self) -> int:
        return len(self.batches)

    def __iter__(self):
        return iter(self.batches)

    @property
    def class_order(self) -> List[int]:
        return [class_id for class_id, _ in self.batches]


@dataclass
class Prediction:
    """Kết quả argmin trên các expert"""
    class_id: int
    score: float                          # squared output norm, thấp hơn là tốt hơn
    per_class_scores: Dict[int, float]


@dataclass
class TrainingSummary:
    """Tóm tắt quá trình train một class"""
    class_id: Optional[int]
    n_samples: int
    initial_loss: float
    final_loss: float
    epoch_losses: List[float] = field(default_factory=list)
    learning_rates: List[float] = field(default_factory=list)
    lr_halvings: int = 0
    seconds: float = 0.0
    reverted_to_initial: bool = False

    @property
    def loss_reduction(self) -> float:
        """Tỷ lệ loss giảm so với lúc khởi tạo"""
        if self.initial_loss <= 0:
            return 0.0
        return 1.0 - self.final_loss / self.initial_loss
