"""Named parameter storage, the SGD update, and the binary checkpoint format.

Checkpoint layout: 4-byte magic ``LTNC``, one version byte, then per record
``u32 name length | utf-8 name | u32 rank | u32 dims... | float32 payload``,
all little-endian, records sorted by name.
"""
import struct

import numpy as np

from .tensor import ShapeError, Tensor

MAGIC = b"LTNC"
FORMAT_VERSION = 1


class ParamStore:
    """Name -> Tensor map with a per-store learning rate and trainable mask."""

    def __init__(self, learning_rate=0.01):
        if not learning_rate > 0:
            raise ValueError("learning rate must be positive")
        self.learning_rate = float(learning_rate)
        self._tensors = {}
        self._trainable = {}

    def add(self, name, values, trainable=True):
        if name in self._tensors:
            raise ValueError(f"duplicate parameter name: {name}")
        t = Tensor(values, requires_grad=trainable)
        self._tensors[name] = t
        self._trainable[name] = bool(trainable)
        return t

    def __contains__(self, name):
        return name in self._tensors

    def __getitem__(self, name):
        return self._tensors[name]

    def names(self):
        return list(self._tensors)

    def trainable(self, name):
        return self._trainable[name]

    def set_trainable(self, name, flag):
        self._trainable[name] = bool(flag)
        self._tensors[name].requires_grad = bool(flag)

    def freeze_all(self):
        for name in self._tensors:
            self.set_trainable(name, False)

    def zero_grads(self):
        for t in self._tensors.values():
            t.zero_grad()

    def gradients(self):
        """Collected grads of trainable parameters after a backward pass."""
        out = {}
        for name, t in self._tensors.items():
            if self._trainable[name] and t.grad is not None:
                out[name] = t.grad
        return out

    def state_bytes(self):
        """Concatenated raw parameter bytes, for bitwise stability checks."""
        return b"".join(self._tensors[n].data.tobytes() for n in sorted(self._tensors))


def sgd_step(store, grads):
    """p <- p - lr * g for every trainable parameter; frozen ones untouched."""
    for name in store.names():
        if not store.trainable(name):
            continue
        g = grads.get(name)
        if g is None:
            raise KeyError(f"missing gradient for trainable parameter {name!r}")
        t = store[name]
        g = np.asarray(g, dtype=np.float64)
        if g.shape != t.data.shape:
            raise ShapeError(f"gradient shape {g.shape} != param shape {t.data.shape} "
                             f"for {name!r}")
        t.data -= store.learning_rate * g


def save_checkpoint(store, path):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", FORMAT_VERSION))
        for name in sorted(store.names()):
            data = store[name].data
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
            fh.write(data.astype("<f4").tobytes())


def load_checkpoint(path, learning_rate=0.01):
    store = ParamStore(learning_rate=learning_rate)
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not a parameter checkpoint (bad magic)")
        (version,) = struct.unpack("<B", fh.read(1))
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        while True:
            head = fh.read(4)
            if not head:
                break
            (nlen,) = struct.unpack("<I", head)
            name = fh.read(nlen).decode("utf-8")
            (rank,) = struct.unpack("<I", fh.read(4))
            dims = struct.unpack(f"<{rank}I", fh.read(4 * rank))
            count = int(np.prod(dims)) if rank else 1
            payload = fh.read(4 * count)
            if len(payload) != 4 * count:
                raise ValueError(f"{path}: truncated payload for {name!r}")
            values = np.frombuffer(payload, dtype="<f4").reshape(dims)
            store.add(name, values.astype(np.float64))
    return store
