"""
Class-by-class stream construction
"""
from typing import List, Optional, Sequence

from ..exceptions import ConfigError
from ..models import ClassStream, LabeledVectors


def parse_class_order(text: Optional[str]) -> Optional[List[int]]:
    """'0,1,2' hoặc '0-9' hoặc '5-9,0-4' -> list of class ids (None nếu rỗng)"""
    if text is None or not str(text).strip():
        return None
    order = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if "-" in item:
                low, high = (int(v) for v in item.split("-", 1))
                order.extend(range(low, high + 1))
            else:
                order.append(int(item))
        except ValueError:
            raise ConfigError(f"cannot parse class order item '{item}'")
    return order


def make_class_stream(ds: LabeledVectors, class_order: Optional[Sequence[int]] = None) -> ClassStream:
    """
    Một batch mỗi class theo class_order; trong batch giữ thứ tự của dataset

    class_order None -> mọi label có mặt, tăng dần.
    """
    order = list(ds.classes) if class_order is None else [int(c) for c in class_order]
    if not order:
        raise ConfigError("class order is empty")
    duplicates = sorted({c for c in order if order.count(c) > 1})
    if duplicates:
        raise ConfigError(f"duplicate classes in order: {duplicates}")
    missing = sorted(set(order) - set(ds.classes))
    if missing:
        raise ConfigError(f"classes {missing} have no samples in the dataset")
    return ClassStream([(class_id, ds.of_class(class_id)) for class_id in order])
