"""
SubNet - low-rank coupling function f(u) = B·σ(A·u + a) + b
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..exceptions import DimensionError
from ..models import ActivationKind, LEAKY_RELU_SLOPE
from ..numkit import Matrix, Vector, as_matrix, as_vector, matvec


def activate(z: np.ndarray, kind: ActivationKind) -> np.ndarray:
    if kind == ActivationKind.RELU:
        return np.maximum(z, 0.0)
    if kind == ActivationKind.LEAKY_RELU:
        return np.where(z > 0.0, z, LEAKY_RELU_SLOPE * z)
    if kind == ActivationKind.TANH:
        return np.tanh(z)
    return z.copy()


def activation_derivative(z: np.ndarray, kind: ActivationKind) -> np.ndarray:
    """σ'(z); at the relu kink the left derivative is used"""
    if kind == ActivationKind.RELU:
        return (z > 0.0).astype(np.float64)
    if kind == ActivationKind.LEAKY_RELU:
        return np.where(z > 0.0, 1.0, LEAKY_RELU_SLOPE)
    if kind == ActivationKind.TANH:
        t = np.tanh(z)
        return 1.0 - t * t
    return np.ones_like(z)


@dataclass(frozen=True)
class SubNet:
    """
    Rank-m bottleneck: A (m × h), a (m), B (h × m), b (h)

    W = AB của fully-connected layer được thay bằng hai factor, với σ ở giữa.
    """
    A: Matrix
    a: Vector
    B: Matrix
    b: Vector
    activation: ActivationKind = ActivationKind.RELU

    def __post_init__(self):
        A = as_matrix(self.A)
        B = as_matrix(self.B)
        rank, half = A.shape
        if B.shape != (half, rank):
            raise DimensionError(f"B must be {half}x{rank} to match A {rank}x{half}, got {B.shape[0]}x{B.shape[1]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "a", as_vector(self.a, rank))
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", as_vector(self.b, half))

    @property
    def half(self) -> int:
        return int(self.A.shape[1])

    @property
    def rank(self) -> int:
        return int(self.A.shape[0])

    @property
    def param_count(self) -> int:
        return self.A.size + self.a.size + self.B.size + self.b.size

    @classmethod
    def zeros(cls, half: int, rank: int, activation: ActivationKind = ActivationKind.RELU) -> "SubNet":
        return cls(
            A=np.zeros((rank, half)),
            a=np.zeros(rank),
            B=np.zeros((half, rank)),
            b=np.zeros(half),
            activation=activation,
        )


def subnet_forward_cached(S: SubNet, u: Vector) -> Tuple[Vector, np.ndarray, np.ndarray]:
    """Forward pass giữ lại pre-activation z và hidden h cho backprop"""
    if u.shape[-1] != S.half:
        raise DimensionError(f"subnet expects input of length {S.half}, got {u.shape[-1]}")
    z = matvec(S.A, u) + S.a
    h = activate(z, S.activation)
    return matvec(S.B, h) + S.b, z, h


def subnet_forward(S: SubNet, u: Vector) -> Vector:
    """B·σ(A·u + a) + b"""
    out, _, _ = subnet_forward_cached(S, u)
    return out
