"""
Analytic gradients của ‖f(x)‖² theo mọi parameter (reverse accumulation)
"""
from collections import OrderedDict
from typing import Dict, Tuple

import numpy as np

from ..exceptions import EmptyDatasetError
from ..numkit import matvec_transposed, outer_accumulate
from .network import BlockTrace, CouplingBlock, ForwardTrace, InvertibleNet, _swap, net_forward
from .subnet import SubNet, activation_derivative


Gradients = Dict[str, np.ndarray]


def _subnet_backward(S: SubNet, u: np.ndarray, z: np.ndarray, h: np.ndarray,
                     g_out: np.ndarray, prefix: str, grads: Gradients) -> np.ndarray:
    """Accumulate dA, da, dB, db; return gradient w.r.t. the subnet input u"""
    grads[f"{prefix}.B"] = outer_accumulate(np.zeros_like(S.B), g_out, h)
    grads[f"{prefix}.b"] = g_out.sum(axis=0)
    g_z = matvec_transposed(S.B, g_out) * activation_derivative(z, S.activation)
    grads[f"{prefix}.A"] = outer_accumulate(np.zeros_like(S.A), g_z, u)
    grads[f"{prefix}.a"] = g_z.sum(axis=0)
    return matvec_transposed(S.A, g_z)


def _block_backward(blk: CouplingBlock, trace: BlockTrace, g_y: np.ndarray,
                    prefix: str, grads: Gradients) -> np.ndarray:
    half = blk.half
    g_y1, g_y2 = g_y[:, :half], g_y[:, half:]
    # y_2 = f_2(y_1) + x_2
    g_y1 = g_y1 + _subnet_backward(blk.f2, trace.y1, trace.z2, trace.h2, g_y2, f"{prefix}.f2", grads)
    g_x2 = g_y2
    # y_1 = f_1(x_2) + x_1
    g_x2 = g_x2 + _subnet_backward(blk.f1, trace.x2, trace.z1, trace.h1, g_y1, f"{prefix}.f1", grads)
    g_x1 = g_y1
    return np.concatenate([g_x1, g_x2], axis=1)


def backward(net: InvertibleNet, trace: ForwardTrace, g_out: np.ndarray) -> Gradients:
    """
    Backprop một gradient đầu ra (N, n) qua toàn bộ net

    Returns:
        OrderedDict cùng key và thứ tự với net.parameters()
    """
    grads: Gradients = {}
    g = g_out
    last = net.n_blocks - 1
    for i in range(last, -1, -1):
        if net.swap_halves and i < last:
            g = _swap(g)
        g = _block_backward(net.blocks[i], trace.blocks[i], g, f"block{i}", grads)
    return OrderedDict((name, grads[name]) for name in net.parameters())


def loss_gradients(net: InvertibleNet, x: np.ndarray) -> Gradients:
    """∂‖f(x)‖²/∂θ cho một sample (hoặc tổng trên một row batch)"""
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y, trace = net_forward(net, X)
    return backward(net, trace, 2.0 * y)


def loss_and_gradients(net: InvertibleNet, X: np.ndarray) -> Tuple[float, Gradients]:
    """Mean squared-norm loss và gradient trung bình trên batch, một lần forward/backward"""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise EmptyDatasetError("gradient over an empty batch")
    y, trace = net_forward(net, X)
    count = X.shape[0]
    loss = float(np.sum(y * y) / count)
    grads = backward(net, trace, (2.0 / count) * y)
    return loss, grads


def batch_loss_gradients(net: InvertibleNet, X: np.ndarray) -> Gradients:
    _, grads = loss_and_gradients(net, X)
    return grads
