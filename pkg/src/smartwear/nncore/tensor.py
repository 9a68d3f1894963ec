"""Tensor with a reverse-mode gradient tape.

Every differentiable op is a :class:`Function` subclass whose ``forward`` works
on raw numpy arrays and whose ``backward`` maps the output gradient to one
gradient per input.  Calling :meth:`Tensor.backward` walks the recorded graph
in reverse topological order.
"""
from __future__ import annotations

import contextlib
import threading

import numpy as np

_state = threading.local()


def default_dtype() -> np.dtype:
    return getattr(_state, "dtype", np.dtype(np.float32))


def grad_enabled() -> bool:
    return getattr(_state, "grad", True)


@contextlib.contextmanager
def wide_precision():
    """Run the enclosed block in float64 (used by gradient checks)."""
    prev = default_dtype()
    _state.dtype = np.dtype(np.float64)
    try:
        yield
    finally:
        _state.dtype = prev


@contextlib.contextmanager
def no_grad():
    prev = grad_enabled()
    _state.grad = False
    try:
        yield
    finally:
        _state.grad = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "retains_grad", "_ctx", "name")

    def __init__(self, data, requires_grad=False, name=None, _ctx=None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data)
        if not np.issubdtype(arr.dtype, np.floating) or arr.dtype != default_dtype():
            arr = arr.astype(default_dtype())
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.retains_grad = False
        self._ctx = _ctx
        self.name = name

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self):
        return self.data

    def detach(self):
        return Tensor(self.data)

    def retain_grad(self):
        """Keep the gradient of a non-leaf tensor after backward."""
        self.retains_grad = True
        return self

    def zero_grad(self):
        self.grad = None

    def __add__(self, other):
        from .functional import add

        return add(self, other)

    def backward(self, grad=None):
        if not self.requires_grad:
            raise RuntimeError("backward() on a tensor that does not require grad")
        if grad is None:
            if self.data.size != 1:
                raise RuntimeError("grad must be given for non-scalar outputs")
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=self.data.dtype).reshape(self.data.shape)

        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for parent in node._ctx.parents:
                    if parent.requires_grad and id(parent) not in seen:
                        stack.append((parent, False))

        grads = {id(self): grad}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._ctx is None or node.retains_grad:
                node.grad = g if node.grad is None else node.grad + g
            if node._ctx is None:
                continue
            in_grads = node._ctx.backward(g)
            for parent, pg in zip(node._ctx.parents, in_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
            # free saved activations once the node has been differentiated
            node._ctx = None


class Function:
    """Base class for differentiable ops; subclasses set ``forward``/``backward``."""

    def __init__(self, *parents):
        self.parents = parents

    @classmethod
    def apply(cls, *inputs, **kwargs):
        tensors = [t if isinstance(t, Tensor) else Tensor(t) for t in inputs]
        ctx = cls(*tensors)
        out = ctx.forward(*[t.data for t in tensors], **kwargs)
        needs = grad_enabled() and any(t.requires_grad for t in tensors)
        return Tensor(out, requires_grad=needs, _ctx=ctx if needs else None)

    def forward(self, *arrays, **kwargs):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError
