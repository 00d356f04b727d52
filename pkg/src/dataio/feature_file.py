"""
OVAFEAT1 - precomputed features của một extractor cố định (little-endian)

    magic "OVAFEAT1" | u16 version=1 | u64 count | u32 dim
    per record: i32 label | dim × f32
"""
import struct

import numpy as np

from ..exceptions import FormatError
from ..models import LabeledVectors
from ..monitoring.logger import RunLogger
from .mnist_idx import read_bytes


MAGIC = b"OVAFEAT1"
VERSION = 1
HEADER = struct.Struct("<8sHQI")

logger = RunLogger("FeatureFile")


def _record_dtype(dim: int) -> np.dtype:
    return np.dtype([("label", "<i4"), ("x", "<f4", (dim,))])


def parse_feature_file(data: bytes, path: str = None) -> LabeledVectors:
    if len(data) < HEADER.size:
        raise FormatError("truncated header", path, len(data))
    magic, version, count, dim = HEADER.unpack(data[:HEADER.size])
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", path, 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", path, 8)
    if dim == 0:
        raise FormatError("dimension must be positive", path, 18)

    record = _record_dtype(dim)
    body = len(data) - HEADER.size
    expected = count * record.itemsize
    if body < expected:
        complete = body // record.itemsize
        offset = HEADER.size + complete * record.itemsize
        missing = record.itemsize - body % record.itemsize
        raise FormatError(
            f"truncated record {complete} of {count} ({missing} bytes short)",
            path, offset,
        )
    if body > expected:
        raise FormatError(f"{body - expected} trailing bytes", path, HEADER.size + expected)

    records = np.frombuffer(data, dtype=record, count=count, offset=HEADER.size)
    labels = records["label"].astype(np.int64)
    if np.any(labels < 0):
        first = int(np.flatnonzero(labels < 0)[0])
        raise FormatError(f"negative label {labels[first]}", path, HEADER.size + first * record.itemsize)
    return LabeledVectors(
        dim=int(dim),
        vectors=records["x"].astype(np.float64).reshape(count, dim),
        labels=labels,
        metadata={"source": "features"},
    )


def load_feature_file(path: str) -> LabeledVectors:
    ds = parse_feature_file(read_bytes(path), path)
    logger.info(f"Loaded {len(ds)} feature vectors of dim {ds.dim} from {path}")
    return ds


def feature_file_bytes(ds: LabeledVectors) -> bytes:
    record = _record_dtype(ds.dim)
    records = np.zeros(len(ds), dtype=record)
    records["label"] = ds.labels
    records["x"] = ds.vectors.astype("<f4")
    return HEADER.pack(MAGIC, VERSION, len(ds), ds.dim) + records.tobytes()


def save_feature_file(ds: LabeledVectors, path: str) -> str:
    with open(path, "wb") as handle:
        handle.write(feature_file_bytes(ds))
    return path
