"""Versioned binary checkpoints.

A checkpoint is a container of named blobs. A blob is either a full network
(spec dims + flat parameter vector) or a bare parameter store (named tensors
without any wiring, used for custom heads such as mixing networks).
Everything is little-endian:

    container: magic b"CMRL" | u16 version | u32 blob count | blobs...
    blob:      u16 name length | name utf-8 | u8 kind
    kind 0/1:  (feedforward / recurrent network)
               u32 in_dim | u32 hidden_dim | u32 out_dim
               | u64 parameter count | f64 x count parameter vector
    kind 2:    (bare store)
               u16 tensor count, then per tensor:
               u16 name length | name utf-8 | u8 rank | u32 x rank dims
               | u64 parameter count | f64 x count tensor data

Parameter counts are validated against the dims on load, so a truncated or
mismatched file fails loudly instead of producing a silently wrong network.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .networks import FEEDFORWARD, RECURRENT, NetSpec, Network
from .params import ParameterStore

MAGIC = b"CMRL"
VERSION = 1
STORE_KIND = 2

_CELL_CODE = {FEEDFORWARD: 0, RECURRENT: 1}
_CELL_NAME = {v: k for k, v in _CELL_CODE.items()}


def _expected_count(spec: NetSpec) -> int:
    net = Network(spec)  # zero-initialized scaffold just to count learnables
    return net.store.size


def _write_name(fh, name: str) -> None:
    raw = name.encode("utf-8")
    fh.write(struct.pack("<H", len(raw)))
    fh.write(raw)


def _read_name(fh) -> str:
    (n,) = struct.unpack("<H", fh.read(2))
    return fh.read(n).decode("utf-8")


def _write_vector(fh, vec: np.ndarray) -> None:
    vec = np.ascontiguousarray(vec, dtype="<f8")
    fh.write(struct.pack("<Q", vec.size))
    fh.write(vec.tobytes())


def _read_vector(fh, path, label: str) -> np.ndarray:
    (n,) = struct.unpack("<Q", fh.read(8))
    vec = np.frombuffer(fh.read(8 * n), dtype="<f8")
    if vec.size != n:
        raise ValueError(f"{path}: truncated parameter vector for {label!r}")
    return vec


def save_checkpoint(path: str | Path, nets: dict[str, Network | ParameterStore]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HI", VERSION, len(nets)))
        for name, net in nets.items():
            _write_name(fh, name)
            if isinstance(net, ParameterStore):
                fh.write(struct.pack("<BH", STORE_KIND, len(net.names)))
                for tensor in net.names:
                    _write_name(fh, tensor)
                    shape = net.view(tensor).shape
                    fh.write(struct.pack("<B", len(shape)))
                    fh.write(struct.pack(f"<{len(shape)}I", *shape))
                    _write_vector(fh, net.view(tensor).ravel())
                continue
            spec = net.spec
            fh.write(struct.pack(
                "<BIII", _CELL_CODE[spec.cell], spec.in_dim, spec.hidden_dim, spec.out_dim
            ))
            _write_vector(fh, net.store.flat)


def load_checkpoint(path: str | Path) -> dict[str, Network | ParameterStore]:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, count = struct.unpack("<HI", fh.read(6))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        nets: dict[str, Network | ParameterStore] = {}
        for _ in range(count):
            name = _read_name(fh)
            (kind,) = struct.unpack("<B", fh.read(1))
            if kind == STORE_KIND:
                (n_tensors,) = struct.unpack("<H", fh.read(2))
                store = ParameterStore()
                for _ in range(n_tensors):
                    tensor = _read_name(fh)
                    (rank,) = struct.unpack("<B", fh.read(1))
                    shape = struct.unpack(f"<{rank}I", fh.read(4 * rank))
                    vec = _read_vector(fh, path, f"{name}/{tensor}")
                    if vec.size != int(np.prod(shape, dtype=np.int64)):
                        raise ValueError(f"{path}: shape mismatch for {name}/{tensor}")
                    store.add(tensor, shape)
                    store.view(tensor)[...] = vec.reshape(shape)
                nets[name] = store
                continue
            if kind not in _CELL_NAME:
                raise ValueError(f"{path}: unknown blob kind {kind} for {name!r}")
            in_dim, hidden_dim, out_dim = struct.unpack("<III", fh.read(12))
            spec = NetSpec(in_dim, out_dim, hidden_dim, _CELL_NAME[kind])
            vec = _read_vector(fh, path, name)
            if vec.size != _expected_count(spec):
                raise ValueError(f"{path}: parameter count mismatch for {name!r}")
            net = Network(spec)
            net.store.flat[:] = vec
            nets[name] = net
    return nets
