"""Named parameter storage with a diffable on-disk format.

File layout (``<name>.params``)::

    cmdf.rgb.conv1.bias 4 0
    cmdf.rgb.conv1.weight 4 8 3 3 4
    <empty line>
    <little-endian float32 payload>

Each manifest line is ``name dim0 dim1 ... offset`` where ``offset`` counts
floats (not bytes) from the start of the payload. Entries are written in
sorted name order so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import os
from collections.abc import Iterator, Mapping

import numpy as np

from .tensor_core import ConvParams, LinearParams, NormParams

_LE_F32 = np.dtype("<f4")


class ParamStore(Mapping):
    """Immutable-by-convention map from layer path to float32 array."""

    def __init__(self, tensors: Mapping[str, np.ndarray] | None = None):
        self._data: dict[str, np.ndarray] = {}
        for name, value in (tensors or {}).items():
            self[name] = value

    def __setitem__(self, name: str, value) -> None:
        if not name or any(ch.isspace() for ch in name):
            raise ValueError(f"invalid parameter name {name!r}")
        arr = np.array(value, dtype=np.float32)
        arr.setflags(write=False)
        self._data[name] = arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self._data[name]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._data))

    def __len__(self) -> int:
        return len(self._data)

    def get_checked(self, name: str, shape: tuple[int, ...]) -> np.ndarray:
        """Look up ``name`` and insist on ``shape``."""
        if name not in self._data:
            raise KeyError(f"parameter {name!r} not found in store")
        arr = self._data[name]
        if tuple(arr.shape) != tuple(shape):
            raise ValueError(f"parameter {name!r} has shape {arr.shape}, expected {tuple(shape)}")
        return arr

    def manifest(self) -> list[tuple[str, tuple[int, ...], int]]:
        rows, offset = [], 0
        for name in self:
            arr = self._data[name]
            rows.append((name, tuple(arr.shape), offset))
            offset += arr.size
        return rows

    def to_bytes(self) -> bytes:
        lines = []
        for name, shape, offset in self.manifest():
            lines.append(" ".join([name, *map(str, shape), str(offset)]))
        header = ("\n".join(lines) + "\n\n").encode("utf-8") if lines else b"\n"
        payload = b"".join(self._data[name].astype(_LE_F32).tobytes() for name in self)
        return header + payload

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ParamStore":
        if blob.startswith(b"\n"):
            header, payload = b"", blob[1:]
        else:
            sep = blob.find(b"\n\n")
            if sep < 0:
                raise ValueError("params file has no manifest terminator")
            header, payload = blob[:sep], blob[sep + 2:]
        if len(payload) % 4:
            raise ValueError("params payload is not a whole number of float32 values")
        flat = np.frombuffer(payload, dtype=_LE_F32)
        store = cls()
        for lineno, line in enumerate(header.decode("utf-8").splitlines(), start=1):
            parts = line.split()
            if len(parts) < 2:
                raise ValueError(f"manifest line {lineno}: expected 'name dims... offset'")
            try:
                dims = tuple(int(d) for d in parts[1:-1])
                offset = int(parts[-1])
            except ValueError:
                raise ValueError(f"manifest line {lineno}: non-integer shape or offset") from None
            size = int(np.prod(dims)) if dims else 1
            if offset < 0 or offset + size > flat.size:
                raise ValueError(f"manifest line {lineno}: entry {parts[0]!r} runs past the payload")
            store[parts[0]] = flat[offset:offset + size].reshape(dims)
        return store

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ParamStore":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def put_conv(store: ParamStore, prefix: str, p) -> None:
    store[f"{prefix}.weight"] = p.weight
    store[f"{prefix}.bias"] = p.bias


def get_conv(store: ParamStore, prefix: str, out_ch: int, in_ch: int, kernel: int):
    return ConvParams(
        weight=store.get_checked(f"{prefix}.weight", (out_ch, in_ch, kernel, kernel)),
        bias=store.get_checked(f"{prefix}.bias", (out_ch,)),
        padding=kernel // 2,
    )


_NORM_FIELDS = ("gamma", "beta", "running_mean", "running_var")


def put_norm(store: ParamStore, prefix: str, p) -> None:
    for field in _NORM_FIELDS:
        store[f"{prefix}.{field}"] = getattr(p, field)


def get_norm(store: ParamStore, prefix: str, channels: int):
    return NormParams(**{f: store.get_checked(f"{prefix}.{f}", (channels,)) for f in _NORM_FIELDS})


def put_linear(store: ParamStore, prefix: str, p) -> None:
    store[f"{prefix}.weight"] = p.weight
    store[f"{prefix}.bias"] = p.bias


def get_linear(store: ParamStore, prefix: str, out_dim: int, in_dim: int):
    return LinearParams(
        weight=store.get_checked(f"{prefix}.weight", (out_dim, in_dim)),
        bias=store.get_checked(f"{prefix}.bias", (out_dim,)),
    )


def save_feature_map(path, name: str, x) -> None:
    """Write a single named tensor in the params format."""
    ParamStore({name: x}).save(path)


def load_feature_map(path, name: str | None = None) -> np.ndarray:
    store = ParamStore.load(path)
    if name is None:
        if len(store) != 1:
            raise ValueError(f"{path}: expected exactly one tensor, found {len(store)}")
        name = next(iter(store))
    arr = store[name]
    if arr.ndim != 3:
        raise ValueError(f"{path}: tensor {name!r} is not rank 3")
    return np.array(arr)
