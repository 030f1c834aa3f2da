"""Dense double-precision matrices with a small reverse-mode tape.

The op vocabulary is fixed to what the line-graph network needs.  Every op
validates shapes and rejects non-finite values.

    tape = Tape()
    w = tape.param(weight)
    out = tape.tanh(tape.matmul(tape.const(x), w))
    tape.backward(out, upstream)
    adam_step([weight], lr=1e-3)
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as ssp


class NonFiniteError(ValueError):
    pass


def _finite(x: np.ndarray, where: str) -> np.ndarray:
    if not np.isfinite(x).all():
        raise NonFiniteError(f"non-finite values in {where}")
    return x


def as_matrix(x) -> np.ndarray:
    a = np.array(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    return _finite(a, "matrix")


class Param:
    """Trainable matrix with gradient and Adam moment buffers."""

    def __init__(self, value, name: str = ""):
        self.name = name
        self.value = as_matrix(value)
        self.grad = np.zeros_like(self.value)
        self.adam_m = np.zeros_like(self.value)
        self.adam_v = np.zeros_like(self.value)
        self.step_count = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def __repr__(self) -> str:
        return f"Param({self.name!r}, shape={self.shape})"


class Var:
    """A value recorded on a :class:`Tape`."""

    __slots__ = ("value", "grad", "param", "needs_grad", "tape")

    def __init__(self, value: np.ndarray, tape: "Tape", needs_grad: bool,
                 param: Param | None = None):
        self.value = value
        self.grad: np.ndarray | None = None
        self.param = param
        self.needs_grad = needs_grad
        self.tape = tape

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def _acc(self, g: np.ndarray) -> None:
        if not self.needs_grad:
            return
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g


class Tape:
    def __init__(self):
        self._backward: list[Callable[[], None]] = []
        self._params: list[Var] = []
        self._done = False

    # leaves

    def param(self, p: Param) -> Var:
        v = Var(p.value, self, True, p)
        self._params.append(v)
        return v

    def const(self, x) -> Var:
        return Var(as_matrix(x), self, False)

    def _out(self, value: np.ndarray, op: str, *inputs: Var) -> Var:
        for x in inputs:
            if x.tape is not self:
                raise ValueError(f"{op}: operand recorded on a different tape")
        return Var(_finite(value, op), self, any(x.needs_grad for x in inputs))

    # ops

    def matmul(self, a: Var, b: Var) -> Var:
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
        out = self._out(a.value @ b.value, "matmul", a, b)

        def back():
            if a.needs_grad:
                a._acc(out.grad @ b.value.T)
            if b.needs_grad:
                b._acc(a.value.T @ out.grad)
        self._record(out, back)
        return out

    def add(self, a: Var, b: Var) -> Var:
        if a.shape != b.shape:
            raise ValueError(f"add: shapes {a.shape} and {b.shape} differ")
        out = self._out(a.value + b.value, "add", a, b)

        def back():
            a._acc(out.grad)
            b._acc(out.grad)
        self._record(out, back)
        return out

    def add_row(self, a: Var, bias: Var) -> Var:
        """``a + bias`` with a ``1 x cols`` bias repeated over rows."""
        if bias.shape != (1, a.shape[1]):
            raise ValueError(f"add_row: bias shape {bias.shape} vs matrix {a.shape}")
        out = self._out(a.value + bias.value, "add_row", a, bias)

        def back():
            a._acc(out.grad)
            bias._acc(out.grad.sum(axis=0, keepdims=True))
        self._record(out, back)
        return out

    def scale(self, a: Var, c: float) -> Var:
        if not np.isfinite(c):
            raise NonFiniteError("scale: non-finite factor")
        out = self._out(a.value * c, "scale", a)

        def back():
            a._acc(out.grad * c)
        self._record(out, back)
        return out

    def tanh(self, a: Var) -> Var:
        out = self._out(np.tanh(a.value), "tanh", a)

        def back():
            a._acc(out.grad * (1.0 - out.value ** 2))
        self._record(out, back)
        return out

    def relu(self, a: Var) -> Var:
        out = self._out(np.maximum(a.value, 0.0), "relu", a)

        def back():
            a._acc(out.grad * (a.value > 0.0))
        self._record(out, back)
        return out

    def mask(self, a: Var, m: np.ndarray) -> Var:
        """Elementwise product with a constant matrix (dropout masks)."""
        if m.shape != a.shape:
            raise ValueError(f"mask: shape {m.shape} vs {a.shape}")
        out = self._out(a.value * m, "mask", a)

        def back():
            a._acc(out.grad * m)
        self._record(out, back)
        return out

    def concat_cols(self, *parts: Var) -> Var:
        rows = {p.shape[0] for p in parts}
        if len(rows) != 1:
            raise ValueError(f"concat_cols: row counts differ {sorted(rows)}")
        out = self._out(np.concatenate([p.value for p in parts], axis=1), "concat_cols", *parts)
        bounds = np.cumsum([0] + [p.shape[1] for p in parts])

        def back():
            for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
                p._acc(out.grad[:, lo:hi])
        self._record(out, back)
        return out

    def row_gather(self, a: Var, indices: Sequence[int] | np.ndarray) -> Var:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
            raise ValueError(f"row_gather: index out of range for {a.shape[0]} rows")
        out = self._out(a.value[idx], "row_gather", a)

        def back():
            if a.needs_grad:
                g = np.zeros_like(a.value)
                np.add.at(g, idx, out.grad)
                a._acc(g)
        self._record(out, back)
        return out

    def aggregate(self, adjacency: ssp.spmatrix, beta: np.ndarray, z: Var) -> Var:
        """Row ``v`` becomes ``z_v + beta_v * sum(z_d for d in N(v))``."""
        adj = ssp.csr_matrix(adjacency)
        n = z.shape[0]
        beta = np.asarray(beta, dtype=np.float64).reshape(-1)
        if adj.shape != (n, n):
            raise ValueError(f"aggregate: adjacency {adj.shape} vs {n} rows")
        if beta.size != n:
            raise ValueError(f"aggregate: {beta.size} coefficients for {n} rows")
        _finite(beta, "aggregate coefficients")
        b = beta[:, None]
        out = self._out(z.value + b * (adj @ z.value), "aggregate", z)

        def back():
            z._acc(out.grad + adj.T @ (b * out.grad))
        self._record(out, back)
        return out

    # reverse pass

    def _record(self, out: Var, back: Callable[[], None]) -> None:
        if out.needs_grad:
            def step():
                if out.grad is not None:
                    back()
            self._backward.append(step)

    def backward(self, out: Var, grad: np.ndarray | None = None) -> None:
        """Propagate ``grad`` (default 1 for a 1x1 output) back to every Param."""
        if self._done:
            raise RuntimeError("tape already consumed by a backward pass")
        if out.tape is not self or not self._backward:
            raise RuntimeError("backward called without a recorded forward pass")
        if grad is None:
            if out.shape != (1, 1):
                raise ValueError("grad required for non-scalar output")
            grad = np.ones((1, 1))
        grad = as_matrix(grad)
        if grad.shape != out.shape:
            raise ValueError(f"grad shape {grad.shape} vs output {out.shape}")
        out.grad = grad.copy()
        for step in reversed(self._backward):
            step()
        for v in self._params:
            if v.grad is not None:
                v.param.grad += v.grad
        self._done = True


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: Sequence[int] | np.ndarray
                          ) -> tuple[float, np.ndarray]:
    """Mean two-class cross-entropy of row-wise softmax and its gradient."""
    logits = as_matrix(logits)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    k = logits.shape[0]
    if k == 0:
        raise ValueError("empty batch")
    if y.size != k:
        raise ValueError(f"{y.size} labels for {k} rows")
    if ((y != 0) & (y != 1)).any():
        raise ValueError("labels must be binary")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_p = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(k)
    loss = float(-log_p[rows, y].mean())
    grad = np.exp(log_p)
    grad[rows, y] -= 1.0
    return loss, grad / k


def adam_step(params: Iterable[Param], lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One bias-corrected Adam update; gradients are zeroed afterwards."""
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    for p in params:
        p.step_count += 1
        t = p.step_count
        p.adam_m *= beta1
        p.adam_m += (1 - beta1) * p.grad
        p.adam_v *= beta2
        p.adam_v += (1 - beta2) * p.grad ** 2
        m_hat = p.adam_m / (1 - beta1 ** t)
        v_hat = p.adam_v / (1 - beta2 ** t)
        p.value -= lr * m_hat / (np.sqrt(v_hat) + eps)
        p.zero_grad()


def save_params(params: Mapping[str, Param] | Iterable[Param], path: str | Path) -> None:
    """Write named matrices (with optimizer state) to an ``.npz`` file."""
    items = params.items() if isinstance(params, Mapping) else ((p.name, p) for p in params)
    arrays = {}
    for name, p in items:
        arrays[f"{name}/value"] = p.value
        arrays[f"{name}/adam_m"] = p.adam_m
        arrays[f"{name}/adam_v"] = p.adam_v
        arrays[f"{name}/step"] = np.array(p.step_count)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_params(path: str | Path) -> dict[str, Param]:
    out: dict[str, Param] = {}
    with np.load(path) as data:
        names = sorted({k.rsplit("/", 1)[0] for k in data.files})
        for name in names:
            p = Param(data[f"{name}/value"], name)
            p.adam_m = data[f"{name}/adam_m"].copy()
            p.adam_v = data[f"{name}/adam_v"].copy()
            p.step_count = int(data[f"{name}/step"])
            out[name] = p
    return out
