"""Binary container for model checkpoints and dataset caches.

Layout: magic (4 bytes), format version (u32 LE), a JSON-free header of
length-prefixed UTF-8 strings and u64 integers, then named float64 tensors
in little-endian row-major order. The same primitives back the dataset
cache format.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .nn import Model, ModelConfig

MODEL_MAGIC = b"CPNN"
CACHE_MAGIC = b"CPDS"
FORMAT_VERSION = 1


class ContainerError(IOError):
    """Raised on malformed or mismatched container files."""


def _write_str(fh, s: str) -> None:
    raw = s.encode("utf-8")
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)


def _read_str(fh) -> str:
    (n,) = struct.unpack("<I", fh.read(4))
    return fh.read(n).decode("utf-8")


def _write_u64(fh, v: int) -> None:
    fh.write(struct.pack("<Q", v))


def _read_u64(fh) -> int:
    return struct.unpack("<Q", fh.read(8))[0]


def _write_f64(fh, v: float) -> None:
    fh.write(struct.pack("<d", v))


def _read_f64(fh) -> float:
    return struct.unpack("<d", fh.read(8))[0]


def _write_tensor(fh, name: str, arr: np.ndarray) -> None:
    _write_str(fh, name)
    arr = np.asarray(arr, dtype="<f8")
    fh.write(struct.pack("<I", arr.ndim))
    for s in arr.shape:
        _write_u64(fh, s)
    fh.write(arr.tobytes(order="C"))


def _read_tensor(fh) -> tuple[str, np.ndarray]:
    name = _read_str(fh)
    (ndim,) = struct.unpack("<I", fh.read(4))
    shape = tuple(_read_u64(fh) for _ in range(ndim))
    count = int(np.prod(shape)) if shape else 1
    data = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shape)
    return name, data.copy()


def save_model(model: Model, path: str | Path) -> None:
    cfg = model.config
    params = model.parameters()
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        _write_str(fh, cfg.architecture)
        _write_u64(fh, cfg.hidden_size)
        _write_u64(fh, cfg.num_classes)
        _write_u64(fh, cfg.input_dim)
        _write_f64(fh, cfg.dropout)
        _write_str(fh, cfg.operator)
        _write_u64(fh, len(params))
        for p in params:
            _write_tensor(fh, p.name, p.value)


def load_model(path: str | Path) -> Model:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MODEL_MAGIC:
            raise ContainerError(f"{path}: bad magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != FORMAT_VERSION:
            raise ContainerError(f"{path}: unsupported version {version}")
        cfg = ModelConfig(
            architecture=_read_str(fh),
            hidden_size=_read_u64(fh),
            num_classes=_read_u64(fh),
            input_dim=_read_u64(fh),
            dropout=_read_f64(fh),
            operator=_read_str(fh),
        )
        model = Model(cfg, np.random.default_rng(0))
        by_name = {p.name: p for p in model.parameters()}
        n = _read_u64(fh)
        if n != len(by_name):
            raise ContainerError(f"{path}: expected {len(by_name)} tensors, found {n}")
        for _ in range(n):
            name, value = _read_tensor(fh)
            param = by_name.get(name)
            if param is None or param.value.shape != value.shape:
                raise ContainerError(f"{path}: unexpected tensor {name!r}")
            param.value[...] = value
    return model
