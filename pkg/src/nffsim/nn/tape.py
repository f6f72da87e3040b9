"""Reverse-mode differentiation over numpy arrays.

A :class:`Tape` records every operation applied to its :class:`Var` values.
``Tape.backward`` then walks the records in exact reverse order, pulling the
output adjoint back to every leaf.  A tape is single-use.

Functions in :mod:`nffsim.nn.ops` accept plain arrays too, in which case no
recording happens; model code is written once and runs either way.
"""

from __future__ import annotations

import numpy as np

from ..errors import LifecycleError


class Var:
    __slots__ = ("value", "tape", "index")
    __array_ufunc__ = None  # make numpy defer to our reflected operators

    def __init__(self, value, tape, index):
        self.value = value
        self.tape = tape
        self.index = index

    shape = property(lambda self: self.value.shape)
    ndim = property(lambda self: self.value.ndim)
    dtype = property(lambda self: self.value.dtype)

    def __len__(self):
        return len(self.value)

    def __repr__(self):
        return f"Var(index={self.index}, shape={self.value.shape})"

    # arithmetic is routed through ops (imported lazily to avoid a cycle)
    def __add__(self, o):
        return _ops().add(self, o)

    def __radd__(self, o):
        return _ops().add(o, self)

    def __sub__(self, o):
        return _ops().sub(self, o)

    def __rsub__(self, o):
        return _ops().sub(o, self)

    def __mul__(self, o):
        return _ops().mul(self, o)

    def __rmul__(self, o):
        return _ops().mul(o, self)

    def __truediv__(self, o):
        return _ops().div(self, o)

    def __rtruediv__(self, o):
        return _ops().div(o, self)

    def __neg__(self):
        return _ops().neg(self)

    def __matmul__(self, o):
        return _ops().matmul(self, o)

    def __rmatmul__(self, o):
        return _ops().matmul(o, self)

    def __pow__(self, p):
        return _ops().power(self, p)

    def __getitem__(self, key):
        return _ops().getitem(self, key)

    def sum(self, axis=None, keepdims=False):
        return _ops().sum(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return _ops().reshape(self, shape)


def _ops():
    from . import ops
    return ops


class Gradients:
    """Leaf adjoints returned by :meth:`Tape.backward`."""

    def __init__(self, adjoints):
        self._adj = adjoints

    def __getitem__(self, var):
        g = self._adj.get(var.index)
        return np.zeros_like(var.value) if g is None else g

    def tree(self, vars_tree):
        return {k: self[v] for k, v in vars_tree.items()}


class Tape:
    def __init__(self):
        self._records = []  # (out_index, parent_indices, vjp)
        self._count = 0
        self.consumed = False

    def __len__(self):
        return len(self._records)

    def _check(self):
        if self.consumed:
            raise LifecycleError("tape already consumed by backward(); record a new forward pass")

    def var(self, value):
        """Register a leaf (parameter or input)."""
        self._check()
        v = Var(np.asarray(value, dtype=np.float64), self, self._count)
        self._count += 1
        return v

    def watch(self, tree):
        """Leaves for every array of a flat ``{name: array}`` mapping."""
        return {k: self.var(v) for k, v in tree.items()}

    def record(self, value, parents, vjp):
        self._check()
        out = Var(value, self, self._count)
        self._count += 1
        self._records.append((out.index, tuple(p.index if isinstance(p, Var) else None for p in parents), vjp))
        return out

    def backward(self, output, adjoint=None, trace=None):
        """Pull ``adjoint`` (default ones) back from ``output`` to every leaf.

        ``trace``, if a list, receives the output index of each visited record.
        """
        self._check()
        if not isinstance(output, Var) or output.tape is not self:
            raise LifecycleError("output was not recorded on this tape")
        self.consumed = True
        seed = np.ones_like(output.value) if adjoint is None else np.asarray(adjoint, dtype=np.float64)
        if seed.shape != output.value.shape:
            seed = np.broadcast_to(seed, output.value.shape).copy()
        adj = {output.index: seed}
        for out_index, parents, vjp in reversed(self._records):
            if trace is not None:
                trace.append(out_index)
            g = adj.pop(out_index, None)
            if g is None:
                continue
            for idx, pg in zip(parents, vjp(g)):
                if idx is None or pg is None:
                    continue
                prev = adj.get(idx)
                adj[idx] = pg if prev is None else prev + pg
        self._records = []
        return Gradients(adj)


def backward(tape, output, adjoint=None):
    return tape.backward(output, adjoint)
