"""
Registry file codec (little-endian)

    magic "OVAINN01" | u16 version=1 | u32 net_count | u32 dim
    per net: u32 class_id | u16 n_blocks | u32 rank | u8 activation
             per block, f1 then f2: A (row-major f32), a, B (row-major f32), b

Activation byte: code 0..3 (relu, leaky_relu, tanh, identity); bit 7 is set
when the net swaps halves between blocks.
"""
import os
import struct
import tempfile
from collections import OrderedDict

import numpy as np

from ..exceptions import DataFileError, FormatError
from ..flowcore import CouplingBlock, InvertibleNet, SubNet
from ..models import ActivationKind
from ..monitoring.logger import RunLogger
from .registry import ExpertRegistry


MAGIC = b"OVAINN01"
VERSION = 1
HEADER = struct.Struct("<8sHII")
NET_HEADER = struct.Struct("<IHIB")
SWAP_FLAG = 0x80

logger = RunLogger("Persistence")


def serialize_expert(class_id: int, net: InvertibleNet) -> bytes:
    """Bytes của một entry trong registry file"""
    code = net.activation.code | (SWAP_FLAG if net.swap_halves else 0)
    parts = [NET_HEADER.pack(int(class_id), net.n_blocks, net.rank, code)]
    for blk in net.blocks:
        for sub in (blk.f1, blk.f2):
            for array in (sub.A, sub.a, sub.B, sub.b):
                parts.append(np.ascontiguousarray(array, dtype="<f4").tobytes())
    return b"".join(parts)


def serialize_registry(reg: ExpertRegistry) -> bytes:
    header = HEADER.pack(MAGIC, VERSION, len(reg), reg.dim or 0)
    return header + b"".join(serialize_expert(c, net) for c, net in reg.items())


class _Reader:
    """Cursor trên bytes, báo lỗi với offset chính xác"""

    def __init__(self, data: bytes, path: str = None):
        self.data = data
        self.path = path
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise FormatError(
                f"truncated file while reading {what} (need {size} bytes, {len(self.data) - self.offset} left)",
                self.path, self.offset,
            )
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, layout: struct.Struct, what: str):
        return layout.unpack(self.take(layout.size, what))

    def floats(self, count: int, what: str) -> np.ndarray:
        raw = self.take(4 * count, what)
        return np.frombuffer(raw, dtype="<f4").astype(np.float64)


def deserialize_registry(data: bytes, path: str = None) -> ExpertRegistry:
    reader = _Reader(data, path)
    magic, version, count, dim = reader.unpack(HEADER, "header")
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", path, 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", path, 8)
    if count and (dim <= 0 or dim % 2):
        raise FormatError(f"invalid flow dimension {dim}", path, 14)
    half = dim // 2

    experts = OrderedDict()
    for _ in range(count):
        start = reader.offset
        class_id, n_blocks, rank, code = reader.unpack(NET_HEADER, "net header")
        if class_id in experts:
            raise FormatError(f"duplicate class id {class_id}", path, start)
        if n_blocks < 1 or rank < 1:
            raise FormatError(f"class {class_id}: invalid n_blocks={n_blocks} rank={rank}", path, start)
        try:
            activation = ActivationKind.from_code(code & ~SWAP_FLAG)
        except ValueError:
            raise FormatError(f"class {class_id}: unknown activation code {code}", path, start + 10)

        blocks = []
        for i in range(n_blocks):
            subs = []
            for name in ("f1", "f2"):
                what = f"class {class_id} block {i} {name}"
                A = reader.floats(rank * half, what + " A").reshape(rank, half)
                a = reader.floats(rank, what + " a")
                B = reader.floats(half * rank, what + " B").reshape(half, rank)
                b = reader.floats(half, what + " b")
                subs.append(SubNet(A=A, a=a, B=B, b=b, activation=activation))
            blocks.append(CouplingBlock(*subs))
        experts[class_id] = InvertibleNet(tuple(blocks), swap_halves=bool(code & SWAP_FLAG)).freeze()

    if reader.offset != len(data):
        raise FormatError(f"{len(data) - reader.offset} trailing bytes", path, reader.offset)
    return ExpertRegistry(experts, dim=dim if count else None)


def save_registry(reg: ExpertRegistry, path: str) -> str:
    """Atomic write: temp file trong cùng thư mục rồi os.replace"""
    payload = serialize_registry(reg)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".registry-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.debug(f"Saved registry with {len(reg)} experts to {path} ({len(payload)} bytes)")
    return path


def load_registry(path: str) -> ExpertRegistry:
    try:
        with open(path, "rb") as handle:
            data = handle.read()
    except OSError as e:
        raise DataFileError(f"cannot read registry {path}: {e}")
    return deserialize_registry(data, path)
