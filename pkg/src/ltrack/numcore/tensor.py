"""Dense float64 tensors with reverse-mode differentiation.

Row-major storage, no views or implicit broadcasting; the only broadcast is
the explicit ``tile_to``.  Every op returns a fresh Tensor whose backward
closure accumulates gradients into its parents, so a scalar ``backward()``
walks the tape once in reverse topological order.
"""
import numpy as np

from .backend import conv2d_backward, conv2d_forward


class ShapeError(ValueError):
    """Raised when operand shapes do not satisfy an op's contract."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + g

    def backward(self):
        """Backpropagate from a scalar output through the recorded tape."""
        if self.data.size != 1:
            raise ShapeError(f"backward() needs a scalar, got shape {self.shape}")
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen or node._backward is None:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(order):
            node._backward(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _result(data, parents, backward):
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _check3d(t, name):
    if t.data.ndim != 3:
        raise ShapeError(f"{name} must be HxWxC, got shape {t.shape}")


def conv2d(x, kernel, stride=1, padding=0):
    """2-D convolution of an HxWxC input with a khxkwxCxC' kernel."""
    _check3d(x, "conv2d input")
    if kernel.data.ndim != 4:
        raise ShapeError(f"conv2d kernel must be khxkwxCxC', got {kernel.shape}")
    if stride < 1 or padding < 0:
        raise ShapeError("conv2d needs stride >= 1 and padding >= 0")
    H, W, C = x.shape
    kh, kw, cin, _ = kernel.shape
    if cin != C:
        raise ShapeError(f"conv2d channel mismatch: input C={C}, kernel expects {cin}")
    if H + 2 * padding < kh or W + 2 * padding < kw:
        raise ShapeError("conv2d: padded input smaller than kernel")
    out = conv2d_forward(x.data, kernel.data, stride, padding)

    def backward(g):
        gx, gk = conv2d_backward(x.data, kernel.data, stride, padding,
                                 np.ascontiguousarray(g))
        if x.requires_grad:
            x._accumulate(gx)
        if kernel.requires_grad:
            kernel._accumulate(gk)

    return _result(out, (x, kernel), backward)


def add_channel_bias(x, bias):
    """Add a per-channel bias vector to the last axis."""
    C = x.shape[-1]
    if bias.shape != (C,):
        raise ShapeError(f"bias shape {bias.shape} does not match {C} channels")
    out = x.data + bias.data

    def backward(g):
        if x.requires_grad:
            x._accumulate(g)
        if bias.requires_grad:
            bias._accumulate(g.reshape(-1, C).sum(axis=0))

    return _result(out, (x, bias), backward)


def relu(x):
    mask = x.data > 0
    out = np.where(mask, x.data, 0.0)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * mask)

    return _result(out, (x,), backward)


def elementwise_mul(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"elementwise_mul shapes differ: {a.shape} vs {b.shape}")
    out = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * b.data)
        if b.requires_grad:
            b._accumulate(g * a.data)

    return _result(out, (a, b), backward)


def concat_channels(a, b):
    """Concatenate two HxWxC feature maps along the channel axis."""
    _check3d(a, "concat_channels a")
    _check3d(b, "concat_channels b")
    if a.shape[:2] != b.shape[:2]:
        raise ShapeError(f"spatial sizes differ: {a.shape} vs {b.shape}")
    ca = a.shape[2]
    out = np.concatenate([a.data, b.data], axis=2)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g[:, :, :ca])
        if b.requires_grad:
            b._accumulate(g[:, :, ca:])

    return _result(out, (a, b), backward)


def tile_to(v, h, w):
    """Broadcast a 1x1xC vector to hxwxC."""
    if v.data.ndim != 3 or v.shape[0] != 1 or v.shape[1] != 1:
        raise ShapeError(f"tile_to expects 1x1xC, got {v.shape}")
    out = np.tile(v.data, (h, w, 1))

    def backward(g):
        if v.requires_grad:
            v._accumulate(g.sum(axis=(0, 1), keepdims=True))

    return _result(out, (v,), backward)


def global_avg_pool(x):
    _check3d(x, "global_avg_pool input")
    H, W, _ = x.shape
    out = x.data.mean(axis=(0, 1), keepdims=True)

    def backward(g):
        if x.requires_grad:
            x._accumulate(np.broadcast_to(g / (H * W), x.shape).copy())

    return _result(out, (x,), backward)


def fully_connected(x, weights, bias):
    """Affine map: rows of x (or x flattened) times weights plus bias.

    A 2-D input is treated as a batch of rows; anything else is flattened
    row-major into a single row and the output is 1-D.
    """
    if weights.data.ndim != 2:
        raise ShapeError(f"weights must be 2-D, got {weights.shape}")
    din, dout = weights.shape
    if bias.shape != (dout,):
        raise ShapeError(f"bias shape {bias.shape} does not match {dout} outputs")
    batched = x.data.ndim == 2
    x2 = x.data if batched else x.data.reshape(1, -1)
    if x2.shape[1] != din:
        raise ShapeError(f"input has {x2.shape[1]} features, weights expect {din}")
    out2 = x2 @ weights.data + bias.data
    out = out2 if batched else out2[0]

    def backward(g):
        g2 = g if batched else g.reshape(1, -1)
        if x.requires_grad:
            x._accumulate((g2 @ weights.data.T).reshape(x.shape))
        if weights.requires_grad:
            weights._accumulate(x2.T @ g2)
        if bias.requires_grad:
            bias._accumulate(g2.sum(axis=0))

    return _result(out, (x, weights, bias), backward)


def reshape(x, shape):
    out = x.data.reshape(shape)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g.reshape(x.shape))

    return _result(out, (x,), backward)


def concat_rows(tensors):
    """Stack 2-D tensors with equal column counts along axis 0."""
    if not tensors:
        raise ShapeError("concat_rows needs at least one tensor")
    cols = tensors[0].shape[1]
    for t in tensors:
        if t.data.ndim != 2 or t.shape[1] != cols:
            raise ShapeError("concat_rows operands must be 2-D with equal columns")
    out = np.concatenate([t.data for t in tensors], axis=0)
    offsets = np.cumsum([0] + [t.shape[0] for t in tensors])

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                t._accumulate(g[lo:hi])

    return _result(out, tuple(tensors), backward)


def take_rows(x, indices):
    """Gather rows of a 2-D tensor; backward scatter-adds duplicates."""
    if x.data.ndim != 2:
        raise ShapeError(f"take_rows expects 2-D input, got {x.shape}")
    idx = np.asarray(indices, dtype=np.int64)
    out = x.data[idx]

    def backward(g):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            np.add.at(gx, idx, g)
            x._accumulate(gx)

    return _result(out, (x,), backward)


def subtract(a, b):
    """a - b where b is a Tensor or a constant ndarray of the same shape."""
    bdata = b.data if isinstance(b, Tensor) else np.asarray(b, dtype=np.float64)
    if a.shape != bdata.shape:
        raise ShapeError(f"subtract shapes differ: {a.shape} vs {bdata.shape}")
    out = a.data - bdata
    parents = (a, b) if isinstance(b, Tensor) else (a,)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g)
        if isinstance(b, Tensor) and b.requires_grad:
            b._accumulate(-g)

    return _result(out, parents, backward)


def add(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"add shapes differ: {a.shape} vs {b.shape}")
    out = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(g)

    return _result(out, (a, b), backward)


def scale(x, c):
    c = float(c)
    out = x.data * c

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * c)

    return _result(out, (x,), backward)


def softmax_xent(logits, labels):
    """Mean negative log-likelihood of integer labels under row softmax.

    Stabilized by per-row max subtraction; raises on non-finite logits.
    """
    if logits.data.ndim != 2:
        raise ShapeError(f"softmax_xent expects NxK logits, got {logits.shape}")
    if not np.isfinite(logits.data).all():
        raise ValueError("softmax_xent: non-finite logits")
    n, k = logits.shape
    lab = np.asarray(labels, dtype=np.int64)
    if lab.shape != (n,):
        raise ShapeError(f"labels shape {lab.shape} does not match {n} rows")
    if lab.min() < 0 or lab.max() >= k:
        raise ValueError("softmax_xent: label out of range")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    denom = expz.sum(axis=1, keepdims=True)
    lse = np.log(denom[:, 0])
    nll = lse - shifted[np.arange(n), lab]
    out = nll.mean()

    def backward(g):
        if logits.requires_grad:
            grad = expz / denom
            grad[np.arange(n), lab] -= 1.0
            logits._accumulate(grad * (float(g) / n))

    return _result(out, (logits,), backward)


def smooth_l1(x):
    """Mean elementwise Huber penalty: 0.5*x^2 inside |x|<1, |x|-0.5 outside."""
    if not np.isfinite(x.data).all():
        raise ValueError("smooth_l1: non-finite input")
    absx = np.abs(x.data)
    inner = absx < 1.0
    per_elem = np.where(inner, 0.5 * x.data * x.data, absx - 0.5)
    n = max(x.data.size, 1)
    out = per_elem.sum() / n

    def backward(g):
        if x.requires_grad:
            d = np.where(inner, x.data, np.sign(x.data))
            x._accumulate(d * (float(g) / n))

    return _result(out, (x,), backward)
