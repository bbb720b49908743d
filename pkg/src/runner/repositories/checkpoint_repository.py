"""
Binary checkpoints of a real field.

Layout (little-endian): magic b"SQGF", version u8, ndim u8, ndim sizes u32, alpha f64, t f64,
then the samples as row-major f64. The payload holds exactly prod(sizes) * 8 bytes.
"""

import dataclasses
import math
import struct
import threading
from collections import defaultdict
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from core.dto import MAX_DIMENSION, GridSpec, RealField, Snapshot
from core.exceptions import CorruptCheckpointError, FieldMismatchError, TruncatedCheckpointError

MAGIC = b"SQGF"
VERSION = 1
PREFIX = struct.Struct("<4sBB")
TIMING = struct.Struct("<dd")
SUFFIX = ".sqgf"


@dataclasses.dataclass(frozen=True, eq=False)
class Checkpoint:
    alpha: float
    t: float
    samples: NDArray[np.float64]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(size) for size in self.samples.shape)

    def to_snapshot(self, L: float = 2 * math.pi) -> Snapshot:
        """Rebuild the snapshot; the period is not stored and has to be supplied."""
        shape = self.shape
        if len(set(shape)) != 1:
            raise FieldMismatchError(f"checkpoint of shape {shape} is not a cubic grid")
        grid = GridSpec(n=len(shape), N=shape[0], L=L, alpha=self.alpha)
        return Snapshot(t=self.t, field=RealField(grid=grid, samples=self.samples))

    @classmethod
    def from_snapshot(cls, snapshot: Snapshot) -> "Checkpoint":
        return cls(alpha=snapshot.field.grid.alpha, t=snapshot.t, samples=snapshot.field.samples)


def encode(checkpoint: Checkpoint) -> bytes:
    shape = checkpoint.shape
    header = PREFIX.pack(MAGIC, VERSION, len(shape)) + struct.pack(f"<{len(shape)}I", *shape)
    payload = np.ascontiguousarray(checkpoint.samples, dtype="<f8").tobytes(order="C")
    return header + TIMING.pack(checkpoint.alpha, checkpoint.t) + payload


def decode(data: bytes) -> Checkpoint:
    if len(data) < PREFIX.size:
        raise TruncatedCheckpointError(f"header needs {PREFIX.size} bytes, got {len(data)}")
    magic, version, ndim = PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CorruptCheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CorruptCheckpointError(f"unsupported version {version}")
    if not 1 <= ndim <= MAX_DIMENSION:
        raise CorruptCheckpointError(f"ndim must be between 1 and {MAX_DIMENSION}, got {ndim}")

    sizes = struct.Struct(f"<{ndim}I")
    offset = PREFIX.size + sizes.size + TIMING.size
    if len(data) < offset:
        raise TruncatedCheckpointError(f"header needs {offset} bytes, got {len(data)}")
    shape = sizes.unpack_from(data, PREFIX.size)
    if 0 in shape:
        raise CorruptCheckpointError(f"empty axis in shape {shape}")
    alpha, t = TIMING.unpack_from(data, PREFIX.size + sizes.size)

    expected = math.prod(shape) * 8
    payload = len(data) - offset
    if payload < expected:
        raise TruncatedCheckpointError(f"payload holds {payload} bytes, header announces {expected}")
    if payload > expected:
        raise CorruptCheckpointError(f"{payload - expected} trailing bytes after the payload")
    samples = np.frombuffer(data, dtype="<f8", count=math.prod(shape), offset=offset).reshape(shape)
    return Checkpoint(alpha=alpha, t=t, samples=samples.astype(np.float64))


class CheckpointRepository:
    """Reads and writes checkpoint files; writes to the same path are serialized."""

    def __init__(self) -> None:
        self._guard = threading.Lock()
        self._locks: defaultdict[Path, threading.Lock] = defaultdict(threading.Lock)

    def _lock(self, path: Path) -> threading.Lock:
        with self._guard:
            return self._locks[path.resolve()]

    def save(self, path: Path, checkpoint: Checkpoint) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock(path):
            path.write_bytes(encode(checkpoint))
        return path

    def save_snapshot(self, path: Path, snapshot: Snapshot) -> Path:
        return self.save(path, Checkpoint.from_snapshot(snapshot))

    def load(self, path: Path) -> Checkpoint:
        return decode(Path(path).read_bytes())
