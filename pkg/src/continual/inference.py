"""
Single-head / multi-head inference: argmin của squared output norm
"""
from typing import Iterable, List, Tuple

import numpy as np

from ..exceptions import ConfigError, DimensionError, RegistryStateError, UnknownClassError
from ..models import Prediction
from .registry import ExpertRegistry


def _prediction(ids: List[int], row: np.ndarray) -> Prediction:
    # ids tăng dần nên argmin lấy class id nhỏ nhất khi hòa
    best = int(np.argmin(row))
    return Prediction(
        class_id=ids[best],
        score=float(row[best]),
        per_class_scores={c: float(s) for c, s in zip(ids, row)},
    )


def _check_ready(reg: ExpertRegistry, x: np.ndarray) -> np.ndarray:
    if len(reg) == 0:
        raise RegistryStateError("cannot predict with an empty registry")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != reg.dim:
        raise DimensionError(f"input has length {x.shape[0]}, registry expects {reg.dim}")
    return x


def predict(reg: ExpertRegistry, x: np.ndarray, threads: int = 1) -> Prediction:
    """y* = argmin_y ‖f_y(x)‖²"""
    x = _check_ready(reg, x)
    ids, scores = reg.scores(x.reshape(1, -1), threads=threads)
    return _prediction(ids, scores[0])


def predict_multi_head(reg: ExpertRegistry, x: np.ndarray, allowed: Iterable[int],
                       threads: int = 1) -> Prediction:
    """Argmin restricted to the allowed class ids (task known at test time)"""
    allowed = sorted({int(c) for c in allowed})
    if not allowed:
        raise ConfigError("multi-head prediction needs a non-empty allowed set")
    unknown = [c for c in allowed if c not in reg]
    if unknown:
        raise UnknownClassError(f"classes {unknown} are not registered")
    x = _check_ready(reg, x)
    ids, scores = reg.subset(allowed).scores(x.reshape(1, -1), threads=threads)
    return _prediction(ids, scores[0])


def score_matrix(model, X: np.ndarray, threads: int = 1) -> Tuple[List[int], np.ndarray]:
    """(class ids tăng dần, (N, t) scores) cho ExpertRegistry hoặc PrototypeModel"""
    X = np.asarray(X, dtype=np.float64)
    return model.scores(X.reshape(-1, X.shape[-1]), threads=threads)


def predict_batch(model, X: np.ndarray, threads: int = 1) -> List[int]:
    """Vectorised single-head prediction for a registry or a prototype model"""
    if len(model) == 0:
        raise RegistryStateError("cannot predict with an empty model")
    ids, scores = score_matrix(model, X, threads)
    return [ids[i] for i in np.argmin(scores, axis=1)]
