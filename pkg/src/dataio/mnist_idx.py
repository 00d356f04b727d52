"""
MNIST IDX reader/writer (big-endian)

    images: u32 magic 0x00000803 | u32 count | u32 rows | u32 cols | u8 pixels (row-major)
    labels: u32 magic 0x00000801 | u32 count | u8 labels
Files ending in .gz are decompressed transparently.
"""
import gzip
import struct
from typing import Tuple

import numpy as np

from ..exceptions import DataFileError, DimensionError, FormatError
from ..models import LabeledVectors
from ..monitoring.logger import RunLogger


IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

logger = RunLogger("MnistIdx")


def read_bytes(path: str) -> bytes:
    """Đọc toàn bộ file (gzip nếu đuôi .gz)"""
    try:
        if str(path).endswith(".gz"):
            with gzip.open(path, "rb") as handle:
                return handle.read()
        with open(path, "rb") as handle:
            return handle.read()
    except OSError as e:
        raise DataFileError(f"cannot read {path}: {e}")


def _check_magic(data: bytes, expected: int, what: str, path: str):
    if len(data) < 4:
        raise FormatError(f"truncated {what} header", path, len(data))
    magic = struct.unpack(">I", data[:4])[0]
    if magic != expected:
        raise FormatError(f"bad {what} magic 0x{magic:08X} (expected 0x{expected:08X})", path, 0)


def parse_idx_images(data: bytes, path: str = None) -> Tuple[int, int, np.ndarray]:
    """Returns (rows, cols, uint8 array (count, rows*cols))"""
    _check_magic(data, IMAGES_MAGIC, "image", path)
    if len(data) < 16:
        raise FormatError("truncated image header", path, len(data))
    _, count, rows, cols = struct.unpack(">IIII", data[:16])
    size = rows * cols
    expected = 16 + count * size
    if len(data) < expected:
        complete = (len(data) - 16) // size if size else 0
        raise FormatError(
            f"truncated image data: {count} images declared, {complete} complete",
            path, 16 + complete * size,
        )
    if len(data) > expected:
        raise FormatError(f"{len(data) - expected} trailing bytes after image data", path, expected)
    pixels = np.frombuffer(data, dtype=np.uint8, count=count * size, offset=16)
    return rows, cols, pixels.reshape(count, size)


def parse_idx_labels(data: bytes, path: str = None) -> np.ndarray:
    _check_magic(data, LABELS_MAGIC, "label", path)
    if len(data) < 8:
        raise FormatError("truncated label header", path, len(data))
    _, count = struct.unpack(">II", data[:8])
    expected = 8 + count
    if len(data) < expected:
        raise FormatError(f"truncated label data: {count} labels declared", path, len(data))
    if len(data) > expected:
        raise FormatError(f"{len(data) - expected} trailing bytes after label data", path, expected)
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=8)


def load_mnist_idx(images_path: str, labels_path: str) -> LabeledVectors:
    """
    Parse một cặp IDX files thành LabeledVectors

    Pixel giữ nguyên giá trị byte [0, 255] (chưa normalize).
    """
    rows, cols, pixels = parse_idx_images(read_bytes(images_path), images_path)
    labels = parse_idx_labels(read_bytes(labels_path), labels_path)
    if labels.shape[0] != pixels.shape[0]:
        raise FormatError(
            f"{pixels.shape[0]} images but {labels.shape[0]} labels",
            labels_path, 4,
        )
    logger.info(f"Loaded {pixels.shape[0]} images {rows}x{cols} from {images_path}")
    return LabeledVectors(
        dim=rows * cols,
        vectors=pixels.astype(np.float64),
        labels=labels.astype(np.int64),
        metadata={"source": "mnist_idx", "rows": rows, "cols": cols},
    )


def idx_bytes(ds: LabeledVectors, rows: int = None, cols: int = None) -> Tuple[bytes, bytes]:
    """(images bytes, labels bytes) cho một dataset pixel thô"""
    rows = rows or ds.metadata.get("rows")
    cols = cols or ds.metadata.get("cols")
    if rows is None or cols is None:
        side = int(round(np.sqrt(ds.dim)))
        rows, cols = side, side
    if rows * cols != ds.dim:
        raise DimensionError(f"{rows}x{cols} images do not match dim {ds.dim}")
    pixels = ds.vectors
    if np.any(pixels < 0) or np.any(pixels > 255) or np.any(pixels != np.round(pixels)):
        raise DimensionError("IDX images need integer pixel values in [0, 255]")
    if np.any(ds.labels < 0) or np.any(ds.labels > 255):
        raise DimensionError("IDX labels must fit in one byte")
    images = struct.pack(">IIII", IMAGES_MAGIC, len(ds), rows, cols) + pixels.astype(np.uint8).tobytes()
    labels = struct.pack(">II", LABELS_MAGIC, len(ds)) + ds.labels.astype(np.uint8).tobytes()
    return images, labels


def save_mnist_idx(ds: LabeledVectors, images_path: str, labels_path: str):
    images, labels = idx_bytes(ds)
    for path, payload in ((images_path, images), (labels_path, labels)):
        opener = gzip.open if str(path).endswith(".gz") else open
        with opener(path, "wb") as handle:
            handle.write(payload)
