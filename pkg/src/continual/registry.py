"""
Expert Registry - class id -> frozen InvertibleNet, theo thứ tự học
"""
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from ..exceptions import ConflictError, DimensionError, UnknownClassError
from ..flowcore import InvertibleNet, param_count, squared_norms


class ExpertRegistry:
    """
    Toàn bộ state của continual learner

    - Insertion order = learning order
    - Mọi net có cùng dim
    - add_class trả về registry mới, các entry cũ giữ nguyên (không copy weights)
    """

    def __init__(self, experts: Optional[Mapping[int, InvertibleNet]] = None, dim: Optional[int] = None):
        self._experts: "OrderedDict[int, InvertibleNet]" = OrderedDict()
        self._dim = dim
        for class_id, net in (experts or {}).items():
            self._insert(class_id, net)

    def _insert(self, class_id: int, net: InvertibleNet):
        class_id = int(class_id)
        if class_id < 0:
            raise DimensionError(f"class ids must be non-negative, got {class_id}")
        if class_id in self._experts:
            raise ConflictError(f"class {class_id} is already registered")
        if self._dim is not None and net.dim != self._dim:
            raise DimensionError(f"net for class {class_id} has dim {net.dim}, registry uses {self._dim}")
        self._dim = net.dim
        self._experts[class_id] = net

    @property
    def dim(self) -> Optional[int]:
        return self._dim

    @property
    def class_ids(self) -> List[int]:
        """Class ids theo thứ tự học"""
        return list(self._experts)

    def __len__(self) -> int:
        return len(self._experts)

    def __contains__(self, class_id) -> bool:
        return int(class_id) in self._experts

    def __iter__(self) -> Iterator[int]:
        return iter(self._experts)

    def items(self) -> Iterable[Tuple[int, InvertibleNet]]:
        return self._experts.items()

    def get(self, class_id: int) -> InvertibleNet:
        try:
            return self._experts[int(class_id)]
        except KeyError:
            raise UnknownClassError(f"class {class_id} is not registered")

    def add_class(self, class_id: int, net: InvertibleNet) -> "ExpertRegistry":
        registry = ExpertRegistry(self._experts, dim=self._dim)
        registry._insert(class_id, net)
        return registry

    def subset(self, class_ids: Iterable[int]) -> "ExpertRegistry":
        """Registry con, giữ thứ tự học"""
        wanted = {int(c) for c in class_ids}
        missing = wanted - set(self._experts)
        if missing:
            raise UnknownClassError(f"classes {sorted(missing)} are not registered")
        return ExpertRegistry(
            OrderedDict((c, n) for c, n in self._experts.items() if c in wanted),
            dim=self._dim,
        )

    def param_count(self) -> int:
        return sum(param_count(net) for net in self._experts.values())

    def param_counts(self) -> Dict[int, int]:
        return {class_id: param_count(net) for class_id, net in self._experts.items()}

    def scores(self, X: np.ndarray, threads: int = 1) -> Tuple[List[int], np.ndarray]:
        """
        Squared output norm của mọi expert trên mọi row

        Returns:
            (class ids tăng dần, (N, t) score matrix với cột theo thứ tự đó)
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self._dim is not None and X.shape[1] != self._dim:
            raise DimensionError(f"inputs have length {X.shape[1]}, registry expects {self._dim}")
        ids = sorted(self._experts)
        nets = [self._experts[c] for c in ids]
        if threads > 1 and len(nets) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                columns = list(pool.map(lambda net: squared_norms(net, X), nets))
        else:
            columns = [squared_norms(net, X) for net in nets]
        if not columns:
            return ids, np.zeros((X.shape[0], 0))
        return ids, np.stack(columns, axis=1)


def add_class(reg: ExpertRegistry, class_id: int, net: InvertibleNet) -> ExpertRegistry:
    """Registry mới có thêm expert; các expert cũ không bị chạm tới"""
    return reg.add_class(class_id, net)
