"""
Nearest-prototype baseline: mean vector mỗi class, predict class gần nhất
"""
from collections import OrderedDict
from typing import Iterable, List, Mapping, Tuple

import numpy as np

from ..exceptions import DimensionError, EmptyDatasetError, RegistryStateError, UnknownClassError


class PrototypeModel:
    """class_id -> mean vector"""

    def __init__(self, prototypes: Mapping[int, np.ndarray]):
        self.prototypes: "OrderedDict[int, np.ndarray]" = OrderedDict(
            (int(c), np.asarray(p, dtype=np.float64).reshape(-1)) for c, p in prototypes.items()
        )
        dims = {p.shape[0] for p in self.prototypes.values()}
        if len(dims) > 1:
            raise DimensionError(f"prototypes disagree on dim: {sorted(dims)}")
        self.dim = dims.pop() if dims else None

    @property
    def class_ids(self) -> List[int]:
        return list(self.prototypes)

    def __len__(self) -> int:
        return len(self.prototypes)

    def subset(self, class_ids: Iterable[int]) -> "PrototypeModel":
        wanted = {int(c) for c in class_ids}
        missing = wanted - set(self.prototypes)
        if missing:
            raise UnknownClassError(f"classes {sorted(missing)} have no prototype")
        return PrototypeModel(OrderedDict((c, p) for c, p in self.prototypes.items() if c in wanted))

    def scores(self, X: np.ndarray, threads: int = 1) -> Tuple[List[int], np.ndarray]:
        """Squared Euclidean distances, cột theo class id tăng dần"""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.dim is not None and X.shape[1] != self.dim:
            raise DimensionError(f"inputs have length {X.shape[1]}, prototypes have {self.dim}")
        ids = sorted(self.prototypes)
        if not ids:
            return ids, np.zeros((X.shape[0], 0))
        columns = []
        for class_id in ids:
            diff = X - self.prototypes[class_id]
            columns.append(np.einsum("nd,nd->n", diff, diff))
        return ids, np.stack(columns, axis=1)


def fit_prototypes(datasets: Mapping[int, np.ndarray]) -> PrototypeModel:
    """Per-class arithmetic mean"""
    prototypes = OrderedDict()
    for class_id, samples in datasets.items():
        X = np.atleast_2d(np.asarray(samples, dtype=np.float64))
        if X.size == 0:
            raise EmptyDatasetError(f"class {class_id} has no samples")
        prototypes[int(class_id)] = X.mean(axis=0)
    return PrototypeModel(prototypes)


def predict_prototype(model: PrototypeModel, x: np.ndarray) -> int:
    """Closest prototype; ties -> smallest class id"""
    if len(model) == 0:
        raise RegistryStateError("prototype model is empty")
    ids, dist = model.scores(np.asarray(x, dtype=np.float64).reshape(1, -1))
    return ids[int(np.argmin(dist[0]))]
