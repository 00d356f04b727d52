"""
Invertible Network - stack of additive coupling blocks

Mỗi block tách x thành x_1 (nửa đầu) và x_2 (nửa sau):
    y_1 = f_1(x_2) + x_1
    y_2 = f_2(y_1) + x_2
Inverse là phép trừ chính xác. Jacobian có det = 1 nên log-likelihood dưới
prior N(0, I) chỉ còn -½‖f(x)‖² + β.
"""
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import List, Mapping, Tuple

import numpy as np

from ..exceptions import ConfigError, DimensionError, EmptyDatasetError
from ..models import ActivationKind
from ..numkit import Rng, Vector, uniform_init
from .subnet import SubNet, subnet_forward, subnet_forward_cached


SUBNET_FIELDS = ("A", "a", "B", "b")


@dataclass(frozen=True)
class CouplingBlock:
    """Hai SubNet f1, f2 cùng map R^half -> R^half"""
    f1: SubNet
    f2: SubNet

    def __post_init__(self):
        if self.f1.half != self.f2.half:
            raise DimensionError(f"f1 works on {self.f1.half} coordinates, f2 on {self.f2.half}")

    @property
    def half(self) -> int:
        return self.f1.half


@dataclass(frozen=True)
class InvertibleNet:
    """Ordered stack of coupling blocks for one class"""
    blocks: Tuple[CouplingBlock, ...]
    swap_halves: bool = False   # swap_halves_between_blocks

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ConfigError("an invertible net needs at least one block")
        halves = {blk.half for blk in blocks}
        if len(halves) != 1:
            raise DimensionError(f"blocks disagree on half size: {sorted(halves)}")
        ranks = {sub.rank for blk in blocks for sub in (blk.f1, blk.f2)}
        activations = {sub.activation for blk in blocks for sub in (blk.f1, blk.f2)}
        if len(ranks) != 1 or len(activations) != 1:
            raise ConfigError("all subnets of a net must share rank and activation")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        return 2 * self.blocks[0].half

    @property
    def rank(self) -> int:
        return self.blocks[0].f1.rank

    @property
    def activation(self) -> ActivationKind:
        return self.blocks[0].f1.activation

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def parameters(self) -> "OrderedDict[str, np.ndarray]":
        """Tên -> array (reference, không copy), thứ tự cố định"""
        params = OrderedDict()
        for i, blk in enumerate(self.blocks):
            for sub_name, sub in (("f1", blk.f1), ("f2", blk.f2)):
                for attr in SUBNET_FIELDS:
                    params[f"block{i}.{sub_name}.{attr}"] = getattr(sub, attr)
        return params

    def with_parameters(self, params: Mapping[str, np.ndarray]) -> "InvertibleNet":
        """Net mới với parameters thay thế (thiếu key -> giữ giá trị cũ)"""
        blocks = []
        for i, blk in enumerate(self.blocks):
            subs = []
            for sub_name, sub in (("f1", blk.f1), ("f2", blk.f2)):
                values = {
                    attr: params.get(f"block{i}.{sub_name}.{attr}", getattr(sub, attr))
                    for attr in SUBNET_FIELDS
                }
                subs.append(SubNet(activation=sub.activation, **values))
            blocks.append(CouplingBlock(*subs))
        return InvertibleNet(tuple(blocks), swap_halves=self.swap_halves)

    def freeze(self) -> "InvertibleNet":
        """Mark every parameter array read-only"""
        for array in self.parameters().values():
            array.setflags(write=False)
        return self


@dataclass
class BlockTrace:
    """Intermediates của một block (batch rows)"""
    x1: np.ndarray
    x2: np.ndarray
    z1: np.ndarray
    h1: np.ndarray
    y1: np.ndarray
    z2: np.ndarray
    h2: np.ndarray


@dataclass
class ForwardTrace:
    blocks: List[BlockTrace] = field(default_factory=list)


def _check_even(x: Vector, half: int):
    if x.shape[-1] % 2 != 0:
        raise DimensionError(f"input length {x.shape[-1]} is odd")
    if x.shape[-1] != 2 * half:
        raise DimensionError(f"block expects length {2 * half}, got {x.shape[-1]}")


def _swap(x: np.ndarray) -> np.ndarray:
    half = x.shape[-1] // 2
    return np.concatenate([x[..., half:], x[..., :half]], axis=-1)


def block_forward_cached(blk: CouplingBlock, x: Vector) -> Tuple[Vector, BlockTrace]:
    _check_even(x, blk.half)
    x1, x2 = x[..., :blk.half], x[..., blk.half:]
    f1_out, z1, h1 = subnet_forward_cached(blk.f1, x2)
    y1 = f1_out + x1
    f2_out, z2, h2 = subnet_forward_cached(blk.f2, y1)
    y2 = f2_out + x2
    trace = BlockTrace(x1=x1, x2=x2, z1=z1, h1=h1, y1=y1, z2=z2, h2=h2)
    return np.concatenate([y1, y2], axis=-1), trace


def block_forward(blk: CouplingBlock, x: Vector) -> Vector:
    y, _ = block_forward_cached(blk, x)
    return y


def block_inverse(blk: CouplingBlock, y: Vector) -> Vector:
    _check_even(y, blk.half)
    y1, y2 = y[..., :blk.half], y[..., blk.half:]
    x2 = y2 - subnet_forward(blk.f2, y1)
    x1 = y1 - subnet_forward(blk.f1, x2)
    return np.concatenate([x1, x2], axis=-1)


def _check_net_input(net: InvertibleNet, x: Vector) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != net.dim:
        raise DimensionError(f"net expects vectors of length {net.dim}, got shape {x.shape}")
    return x


def net_forward(net: InvertibleNet, x: Vector) -> Tuple[Vector, ForwardTrace]:
    """Apply blocks in order, caching intermediates"""
    x = _check_net_input(net, x)
    trace = ForwardTrace()
    last = net.n_blocks - 1
    for i, blk in enumerate(net.blocks):
        x, block_trace = block_forward_cached(blk, x)
        trace.blocks.append(block_trace)
        if net.swap_halves and i < last:
            x = _swap(x)
    return x, trace


def net_inverse(net: InvertibleNet, y: Vector) -> Vector:
    """Invert blocks in reverse order"""
    y = _check_net_input(net, y)
    last = net.n_blocks - 1
    for i in range(last, -1, -1):
        if net.swap_halves and i < last:
            y = _swap(y)
        y = block_inverse(net.blocks[i], y)
    return y


def beta(n: int) -> float:
    """β = -(n/2)·log(2π)"""
    return -0.5 * n * math.log(2.0 * math.pi)


def squared_norms(net: InvertibleNet, x: Vector):
    """‖f(x)‖² (scalar for a vector, (N,) for a row batch)"""
    y, _ = net_forward(net, x)
    return np.sum(y * y, axis=-1)


def log_likelihood(net: InvertibleNet, x: Vector):
    """Exact Gaussian log-likelihood: -½‖f(x)‖² + β"""
    return -0.5 * squared_norms(net, x) + beta(net.dim)


def loss_batch(net: InvertibleNet, X) -> float:
    """(1/|X|)·Σ‖f(x)‖²"""
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0 or (X.ndim == 2 and X.shape[0] == 0):
        raise EmptyDatasetError("loss over an empty sample set")
    if X.ndim == 1:
        X = X.reshape(1, -1)
    return float(np.mean(squared_norms(net, X)))


def param_count(net: InvertibleNet) -> int:
    """blocks × 2 × (2·m·h + m + h)"""
    return int(sum(array.size for array in net.parameters().values()))


def zero_net(dim: int, rank: int, n_blocks: int = 2,
             activation: ActivationKind = ActivationKind.RELU,
             swap_halves: bool = False) -> InvertibleNet:
    """Identity map: mọi parameter bằng 0"""
    half = _half_of(dim)
    blocks = tuple(
        CouplingBlock(SubNet.zeros(half, rank, activation), SubNet.zeros(half, rank, activation))
        for _ in range(n_blocks)
    )
    return InvertibleNet(blocks, swap_halves=swap_halves)


def init_net(dim: int, rank: int, n_blocks: int, activation: ActivationKind, rng: Rng,
             init_bound: float = 1.0, swap_halves: bool = False) -> Tuple[InvertibleNet, Rng]:
    """
    Fresh net với fan-in uniform init

    A, a ~ U[-init_bound/√h, +init_bound/√h]; B, b ~ U[-init_bound/√m, +init_bound/√m].
    Draw order: block by block, f1 then f2, A, a, B, b (row-major).
    """
    half = _half_of(dim)
    if rank < 1:
        raise ConfigError(f"rank must be >= 1, got {rank}")
    if n_blocks < 1:
        raise ConfigError("an invertible net needs at least one block")
    bound_in = init_bound / math.sqrt(half)
    bound_hidden = init_bound / math.sqrt(rank)

    blocks = []
    for _ in range(n_blocks):
        subs = []
        for _ in range(2):
            A, rng = uniform_init(rank, half, bound_in, rng)
            a, rng = uniform_init(1, rank, bound_in, rng)
            B, rng = uniform_init(half, rank, bound_hidden, rng)
            b, rng = uniform_init(1, half, bound_hidden, rng)
            subs.append(SubNet(A=A, a=a.reshape(-1), B=B, b=b.reshape(-1), activation=activation))
        blocks.append(CouplingBlock(*subs))
    return InvertibleNet(tuple(blocks), swap_halves=swap_halves), rng


def _half_of(dim: int) -> int:
    if dim <= 0 or dim % 2 != 0:
        raise DimensionError(f"flow dimension must be a positive even number, got {dim} (use pad_to_even)")
    return dim // 2

