"""
Adam optimizer với L2 weight decay - functional, state-threading
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from ..exceptions import DimensionError


Params = Mapping[str, np.ndarray]


@dataclass
class AdamState:
    """Moment estimates mirror parameter shapes; t = số step đã chạy"""
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros_like(cls, params: Params, **hyper) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            **hyper
        )


def adam_step(params: Params, grads: Params, state: AdamState, lr: float,
              weight_decay: float = 0.0, decoupled: bool = False
              ) -> Tuple["OrderedDict[str, np.ndarray]", AdamState]:
    """
    One Adam update

    Coupled (default): g ← grad + wd·θ trước khi cập nhật moments.
    Decoupled: θ ← θ − lr·wd·θ tách riêng khỏi moments.

    Returns:
        (new params, new state); inputs are not modified
    """
    if set(params) != set(grads):
        raise DimensionError("params and grads have different keys")
    if not state.m:
        state = AdamState.zeros_like(params, beta1=state.beta1, beta2=state.beta2,
                                     epsilon=state.epsilon)

    t = state.t + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t

    new_params = OrderedDict()
    new_m, new_v = {}, {}
    for key, theta in params.items():
        g = grads[key]
        if g.shape != theta.shape or state.m[key].shape != theta.shape:
            raise DimensionError(f"shape mismatch for {key}: param {theta.shape}, grad {g.shape}")
        if weight_decay and not decoupled:
            g = g + weight_decay * theta

        m = state.beta1 * state.m[key] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[key] + (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2

        updated = theta - lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
        if weight_decay and decoupled:
            updated = updated - lr * weight_decay * theta

        new_params[key] = updated
        new_m[key] = m
        new_v[key] = v

    return new_params, AdamState(m=new_m, v=new_v, t=t, beta1=state.beta1,
                                 beta2=state.beta2, epsilon=state.epsilon)
