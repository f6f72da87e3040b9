"""Differentiable primitives working on :class:`Var` or plain arrays."""

import numpy as np

from .tape import Var


def value(x):
    return x.value if isinstance(x, Var) else x


def _tape(*xs):
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    return None


def unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (reverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _shape(x):
    return np.shape(value(x))


def add(a, b):
    t = _tape(a, b)
    out = value(a) + value(b)
    if t is None:
        return out
    sa, sb = _shape(a), _shape(b)
    return t.record(out, (a, b), lambda g: (unbroadcast(g, sa), unbroadcast(g, sb)))


def sub(a, b):
    t = _tape(a, b)
    out = value(a) - value(b)
    if t is None:
        return out
    sa, sb = _shape(a), _shape(b)
    return t.record(out, (a, b), lambda g: (unbroadcast(g, sa), unbroadcast(-g, sb)))


def mul(a, b):
    t = _tape(a, b)
    va, vb = value(a), value(b)
    out = va * vb
    if t is None:
        return out
    sa, sb = np.shape(va), np.shape(vb)
    return t.record(out, (a, b), lambda g: (
        unbroadcast(g * vb, sa) if isinstance(a, Var) else None,
        unbroadcast(g * va, sb) if isinstance(b, Var) else None))


def div(a, b):
    t = _tape(a, b)
    va, vb = value(a), value(b)
    out = va / vb
    if t is None:
        return out
    sa, sb = np.shape(va), np.shape(vb)
    return t.record(out, (a, b), lambda g: (
        unbroadcast(g / vb, sa) if isinstance(a, Var) else None,
        unbroadcast(-g * out / vb, sb) if isinstance(b, Var) else None))


def neg(a):
    t = _tape(a)
    if t is None:
        return -a
    return t.record(-a.value, (a,), lambda g: (-g,))


def power(a, p):
    t = _tape(a)
    va = value(a)
    out = va**p
    if t is None:
        return out
    return t.record(out, (a,), lambda g: (g * p * va ** (p - 1),))


def square(a):
    return mul(a, a)


def matmul(a, b):
    """``np.matmul`` with batch broadcasting; 1-D operands are not supported."""
    t = _tape(a, b)
    va, vb = value(a), value(b)
    out = va @ vb
    if t is None:
        return out
    sa, sb = va.shape, vb.shape
    return t.record(out, (a, b), lambda g: (
        unbroadcast(g @ np.swapaxes(vb, -1, -2), sa) if isinstance(a, Var) else None,
        unbroadcast(np.swapaxes(va, -1, -2) @ g, sb) if isinstance(b, Var) else None))


def _unary(fn, dfn):
    def op(a):
        t = _tape(a)
        va = value(a)
        out = fn(va)
        if t is None:
            return out
        return t.record(out, (a,), lambda g: (g * dfn(va, out),))
    op.__name__ = fn.__name__
    return op


tanh = _unary(np.tanh, lambda x, y: 1.0 - y * y)
exp = _unary(np.exp, lambda x, y: y)
log = _unary(np.log, lambda x, y: 1.0 / x)
sin = _unary(np.sin, lambda x, y: np.cos(x))
cos = _unary(np.cos, lambda x, y: -np.sin(x))
sqrt = _unary(np.sqrt, lambda x, y: 0.5 / y)
relu = _unary(lambda x: np.maximum(x, 0.0), lambda x, y: (x > 0).astype(np.float64))


def sum(a, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy
    t = _tape(a)
    va = value(a)
    out = np.sum(va, axis=axis, keepdims=keepdims)
    if t is None:
        return out
    shape = va.shape

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)
    return t.record(np.asarray(out), (a,), vjp)


def mean(a, axis=None, keepdims=False):
    n = np.size(value(a)) if axis is None else np.prod([np.shape(value(a))[i] for i in np.atleast_1d(axis)])
    return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def reshape(a, shape):
    t = _tape(a)
    va = value(a)
    out = np.reshape(va, shape)
    if t is None:
        return out
    s = va.shape
    return t.record(out, (a,), lambda g: (g.reshape(s),))


def swapaxes(a, i, j):
    t = _tape(a)
    out = np.swapaxes(value(a), i, j)
    if t is None:
        return out
    return t.record(out, (a,), lambda g: (np.swapaxes(g, i, j),))


def expand_dims(a, axis):
    t = _tape(a)
    va = value(a)
    out = np.expand_dims(va, axis)
    if t is None:
        return out
    s = va.shape
    return t.record(out, (a,), lambda g: (g.reshape(s),))


def broadcast_to(a, shape):
    t = _tape(a)
    va = value(a)
    out = np.broadcast_to(va, shape)
    if t is None:
        return out
    s = va.shape
    return t.record(out, (a,), lambda g: (unbroadcast(g, s),))


def getitem(a, key):
    t = _tape(a)
    va = value(a)
    out = va[key]
    if t is None:
        return out

    def vjp(g):
        full = np.zeros_like(va)
        np.add.at(full, key, g)
        return (full,)
    return t.record(np.asarray(out), (a,), vjp)


def scatter_add(values, index, shape):
    """``out = zeros(shape); out[index] += values`` with repeated indices summed."""
    t = _tape(values)
    vv = value(values)
    out = np.zeros(shape)
    np.add.at(out, index, vv)
    if t is None:
        return out
    return t.record(out, (values,), lambda g: (g[index],))


def concat(xs, axis=-1):
    t = _tape(*xs)
    vals = [value(x) for x in xs]
    out = np.concatenate(vals, axis=axis)
    if t is None:
        return out
    splits = np.cumsum([v.shape[axis] for v in vals])[:-1]
    shapes = [v.shape for v in vals]

    def vjp(g):
        parts = np.split(g, splits, axis=axis)
        return tuple(unbroadcast(p, s) for p, s in zip(parts, shapes))
    return t.record(out, tuple(xs), vjp)


def stack(xs, axis=0):
    xs = [expand_dims(x, axis) for x in xs]
    return concat(xs, axis=axis)


def max(a, axis):  # noqa: A001 - mirrors numpy
    """Max over one axis; ties send the gradient to the lowest index."""
    t = _tape(a)
    va = value(a)
    idx = np.argmax(va, axis=axis)
    out = np.take_along_axis(va, np.expand_dims(idx, axis), axis=axis).squeeze(axis)
    if t is None:
        return out

    def vjp(g):
        full = np.zeros_like(va)
        np.put_along_axis(full, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis)
        return (full,)
    return t.record(out, (a,), vjp)


def where(cond, a, b):
    """Select with a constant boolean mask."""
    t = _tape(a, b)
    va, vb = value(a), value(b)
    out = np.where(cond, va, vb)
    if t is None:
        return out
    sa, sb = np.shape(va), np.shape(vb)
    return t.record(out, (a, b), lambda g: (
        unbroadcast(np.where(cond, g, 0.0), sa) if isinstance(a, Var) else None,
        unbroadcast(np.where(cond, 0.0, g), sb) if isinstance(b, Var) else None))


def cross(a, b):
    t = _tape(a, b)
    va, vb = value(a), value(b)
    out = np.cross(va, vb)
    if t is None:
        return out
    sa, sb = np.shape(va), np.shape(vb)
    return t.record(out, (a, b), lambda g: (
        unbroadcast(np.cross(vb, g), sa) if isinstance(a, Var) else None,
        unbroadcast(np.cross(g, va), sb) if isinstance(b, Var) else None))


def detach(a):
    return value(a)
