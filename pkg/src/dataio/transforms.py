"""
Dataset transforms: normalization, dequantization, padding, per-class limits
"""
from typing import Tuple

import numpy as np

from ..exceptions import ConfigError
from ..models import LabeledVectors, Normalization, NormalizationKind
from ..numkit import Rng, rng_uniform


def parse_normalization(text: str) -> Normalization:
    """
    "none" | "scale_255" | "affine:shift,scale"

    Examples:
        parse_normalization("affine:0.5,2") -> Normalization(AFFINE, 0.5, 2.0)
    """
    key = (text or "none").strip().lower().replace("-", "_")
    if key == NormalizationKind.NONE.value:
        return Normalization()
    if key in (NormalizationKind.SCALE_255.value, "scale255"):
        return Normalization(NormalizationKind.SCALE_255)
    if key.startswith(NormalizationKind.AFFINE.value):
        _, _, params = key.partition(":")
        try:
            shift, scale = (float(v) for v in params.split(","))
        except ValueError:
            raise ConfigError(f"affine normalization needs 'affine:shift,scale', got '{text}'")
        normalization = Normalization(NormalizationKind.AFFINE, shift, scale)
        _check_scale(normalization)
        return normalization
    raise ConfigError(f"unknown normalization '{text}' (none|scale_255|affine:shift,scale)")


def _check_scale(normalization: Normalization):
    if normalization.kind == NormalizationKind.AFFINE and normalization.scale == 0:
        raise ConfigError("affine normalization scale must be non-zero")


def normalize(ds: LabeledVectors, scheme: Normalization) -> LabeledVectors:
    """Elementwise scaling với hằng số cố định, không phụ thuộc class"""
    if isinstance(scheme, str):
        scheme = parse_normalization(scheme)
    _check_scale(scheme)
    if scheme.kind == NormalizationKind.NONE:
        vectors = ds.vectors.copy()
    elif scheme.kind == NormalizationKind.SCALE_255:
        vectors = ds.vectors / 255.0
    else:
        vectors = (ds.vectors - scheme.shift) / scheme.scale
    metadata = dict(ds.metadata, normalization=scheme.describe())
    return LabeledVectors(dim=ds.dim, vectors=vectors, labels=ds.labels.copy(), metadata=metadata)


def dequantize(ds: LabeledVectors, rng: Rng) -> Tuple[LabeledVectors, Rng]:
    """Cộng uniform [0, 1) noise vào pixel thô (trước khi scale)"""
    rng, noise = rng_uniform(rng, ds.vectors.size)
    vectors = ds.vectors + noise.reshape(ds.vectors.shape)
    metadata = dict(ds.metadata, dequantized=True)
    return LabeledVectors(dim=ds.dim, vectors=vectors, labels=ds.labels.copy(), metadata=metadata), rng


def pad_to_even(ds: LabeledVectors) -> LabeledVectors:
    """Thêm một coordinate 0 nếu dim lẻ; metadata['padded'] ghi lại việc này"""
    if ds.dim % 2 == 0:
        metadata = dict(ds.metadata)
        metadata.setdefault("padded", False)
        return LabeledVectors(dim=ds.dim, vectors=ds.vectors, labels=ds.labels, metadata=metadata)
    vectors = np.hstack([ds.vectors, np.zeros((len(ds), 1))])
    metadata = dict(ds.metadata, padded=True)
    return LabeledVectors(dim=ds.dim + 1, vectors=vectors, labels=ds.labels.copy(), metadata=metadata)


def limit_per_class(ds: LabeledVectors, k: int) -> LabeledVectors:
    """Giữ k sample đầu tiên của mỗi class, theo thứ tự dataset"""
    if k < 1:
        raise ConfigError(f"max per class must be >= 1, got {k}")
    keep = np.zeros(len(ds), dtype=bool)
    for class_id in ds.classes:
        keep[np.flatnonzero(ds.labels == class_id)[:k]] = True
    return ds.select(keep)
