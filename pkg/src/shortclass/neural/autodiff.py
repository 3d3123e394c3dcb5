"""Reverse-mode automatic differentiation over numpy arrays.

A :class:`Tensor` records the operation that produced it; calling
:meth:`Tensor.backward` on a scalar result accumulates ``grad`` on every
tensor with ``requires_grad`` that contributed to it.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import NumericError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Accumulate d(self)/d(t) into ``t.grad`` for every tracked ancestor ``t``."""
        if self.data.size != 1:
            raise ValueError("backward needs a scalar tensor")
        if not np.isfinite(self.data).all():
            raise NumericError("loss is not finite")
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            stack.extend((p, False) for p in node._parents if p.requires_grad)
        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if not np.isfinite(pg).all():
                    raise NumericError("non-finite gradient during backpropagation")
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    __add__ = lambda self, o: add(self, o)
    __radd__ = lambda self, o: add(o, self)
    __sub__ = lambda self, o: sub(self, o)
    __rsub__ = lambda self, o: sub(o, self)
    __mul__ = lambda self, o: mul(self, o)
    __rmul__ = lambda self, o: mul(o, self)
    __matmul__ = lambda self, o: matmul(self, o)
    __neg__ = lambda self: mul(self, -1.0)
    __getitem__ = lambda self, idx: getitem(self, idx)


def tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _track(*parents):
    return any(p.requires_grad for p in parents)


def _node(data, parents, backward):
    if _track(*parents):
        return Tensor(data, True, parents, backward)
    return Tensor(data)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def add(a, b):
    a, b = tensor(a), tensor(b)
    return _node(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b):
    a, b = tensor(a), tensor(b)
    return _node(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b):
    a, b = tensor(a), tensor(b)
    return _node(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def matmul(a, b):
    """``a @ b`` for ``a`` of shape (..., n) and a 2-D ``b`` of shape (n, m)."""
    a, b = tensor(a), tensor(b)

    def back(g):
        ga = g @ b.data.T
        gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return ga, gb

    return _node(a.data @ b.data, (a, b), back)


def total(a, axis=None):
    a = tensor(a)

    def back(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _node(a.data.sum(axis=axis), (a,), back)


def mean(a, axis=None):
    a = tensor(a)
    n = a.data.size if axis is None else a.shape[axis]
    return mul(total(a, axis), 1.0 / n)


def relu(a):
    a = tensor(a)
    mask = a.data > 0
    return _node(a.data * mask, (a,), lambda g: (g * mask,))


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(a):
    a = tensor(a)
    s = _sigmoid(a.data)
    return _node(s, (a,), lambda g: (g * s * (1.0 - s),))


def tanh(a):
    a = tensor(a)
    t = np.tanh(a.data)
    return _node(t, (a,), lambda g: (g * (1.0 - t * t),))


def reshape(a, shape):
    a = tensor(a)
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def flatten(a):
    """Collapse every axis after the first."""
    return reshape(a, (a.shape[0], -1))


def concat(tensors, axis=-1):
    ts = [tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in ts])[:-1]
    return _node(np.concatenate([t.data for t in ts], axis=axis), tuple(ts),
                 lambda g: tuple(np.split(g, sizes, axis=axis)))


def getitem(a, idx):
    a = tensor(a)

    def back(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    return _node(a.data[idx], (a,), back)


def flip(a, axis):
    a = tensor(a)
    return _node(np.flip(a.data, axis).copy(), (a,), lambda g: (np.flip(g, axis).copy(),))


def embedding(weight, ids):
    """Rows of ``weight`` selected by the integer array ``ids``."""
    ids = np.asarray(ids, dtype=np.int64)

    def back(g):
        out = np.zeros_like(weight.data)
        np.add.at(out, ids.ravel(), g.reshape(-1, weight.shape[1]))
        return (out,)

    return _node(weight.data[ids], (weight,), back)


def dense(x, w, b):
    return add(matmul(x, w), b)


def conv1d(x, w, b):
    """Zero-padded ("same") cross-correlation along the time axis.

    ``x`` is (batch, length, channels), ``w`` is (kernel, channels, filters)
    and ``b`` is (filters,). The output keeps the input length; the padding
    puts ``(kernel - 1) // 2`` zeros before the sequence and the rest after.
    """
    x, w, b = tensor(x), tensor(w), tensor(b)
    B, L, C = x.shape
    K, _, F = w.shape
    lo = (K - 1) // 2
    xp = np.pad(x.data, ((0, 0), (lo, K - 1 - lo), (0, 0)))
    cols = sliding_window_view(xp, K, axis=1)            # (B, L, C, K)
    cols = cols.transpose(0, 1, 3, 2).reshape(B, L, K * C)
    wm = w.data.reshape(K * C, F)
    out = cols @ wm + b.data

    def back(g):
        gw = (cols.reshape(-1, K * C).T @ g.reshape(-1, F)).reshape(K, C, F)
        gb = g.sum(axis=(0, 1))
        gcols = (g @ wm.T).reshape(B, L, K, C)
        gxp = np.zeros_like(xp)
        for k in range(K):
            gxp[:, k:k + L] += gcols[:, :, k]
        return gxp[:, lo:lo + L], gw, gb

    return _node(out, (x, w, b), back)


def maxpool1d(x, pool_size=None):
    """Max over non-overlapping windows of the time axis.

    ``pool_size=None`` pools the whole sequence. A trailing partial window
    is dropped. The gradient goes to the first maximal element of a window.
    """
    x = tensor(x)
    B, L, F = x.shape
    p = L if pool_size is None else min(pool_size, L)
    n = L // p
    win = x.data[:, :n * p].reshape(B, n, p, F)
    arg = win.argmax(axis=2)
    out = np.take_along_axis(win, arg[:, :, None, :], axis=2)[:, :, 0, :]

    def back(g):
        gw = np.zeros_like(win)
        np.put_along_axis(gw, arg[:, :, None, :], g[:, :, None, :], axis=2)
        gx = np.zeros_like(x.data)
        gx[:, :n * p] = gw.reshape(B, n * p, F)
        return (gx,)

    return _node(out, (x,), back)


def dropout(x, rate, rng, training):
    """Inverted dropout: kept units are scaled by ``1/(1-rate)``; identity in eval mode."""
    x = tensor(x)
    if not training or rate == 0.0:
        return x
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return mul(x, mask)


def lstm(x, wx, wh, b, reverse=False, return_sequences=False):
    """Single-layer LSTM with backpropagation through time.

    ``x`` is (batch, time, features); ``wx`` (features, 4H), ``wh`` (H, 4H)
    and ``b`` (4H,) hold the input, forget, candidate and output blocks in
    that order. Gates use the sigmoid, the candidate and cell output use
    tanh. Returns the final hidden state (batch, H), or every hidden state
    (batch, time, H) in input order when ``return_sequences`` is set. With
    ``reverse`` the sequence is consumed from the last step to the first.
    """
    x, wx, wh, b = tensor(x), tensor(wx), tensor(wh), tensor(b)
    B, T, _ = x.shape
    H = wh.shape[0]
    steps = range(T - 1, -1, -1) if reverse else range(T)
    xw = x.data @ wx.data + b.data                      # (B, T, 4H)
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    cache = []
    hs = np.zeros((B, T, H))
    for t in steps:
        z = xw[:, t] + h @ wh.data
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        gc = np.tanh(z[:, 2 * H:3 * H])
        o = _sigmoid(z[:, 3 * H:])
        c_prev, h_prev = c, h
        c = f * c_prev + i * gc
        tc = np.tanh(c)
        h = o * tc
        hs[:, t] = h
        cache.append((t, i, f, gc, o, c_prev, h_prev, tc))
    out = hs if return_sequences else h

    def back(g):
        gxw = np.zeros_like(xw)
        gwh = np.zeros_like(wh.data)
        dh = np.zeros((B, H))
        dc = np.zeros((B, H))
        for t, i, f, gc, o, c_prev, h_prev, tc in reversed(cache):
            if return_sequences:
                dh = dh + g[:, t]
            elif t == cache[-1][0]:
                dh = dh + g
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            di = dc * gc
            dg = dc * i
            df = dc * c_prev
            dz = np.concatenate([di * i * (1.0 - i), df * f * (1.0 - f),
                                 dg * (1.0 - gc * gc), do * o * (1.0 - o)], axis=1)
            gxw[:, t] = dz
            gwh += h_prev.T @ dz
            dh = dz @ wh.data.T
            dc = dc * f
        gx = gxw @ wx.data.T
        gwx = x.data.reshape(-1, x.shape[2]).T @ gxw.reshape(-1, 4 * H)
        return gx, gwx, gwh, gxw.sum(axis=(0, 1))

    return _node(out, (x, wx, wh, b), back)


def bce(p, y, eps=1e-12):
    """Mean binary cross-entropy of probabilities ``p`` against 0/1 targets ``y``."""
    p = tensor(p)
    y = np.asarray(y, dtype=np.float64).reshape(p.shape)
    q = np.clip(p.data, eps, 1.0 - eps)
    n = p.data.size
    loss = -np.mean(y * np.log(q) + (1.0 - y) * np.log(1.0 - q))
    return _node(loss, (p,), lambda g: (g * (q - y) / (q * (1.0 - q)) / n,))


def bce_with_logits(z, y):
    """Mean binary cross-entropy of ``sigmoid(z)``, computed stably from the logits."""
    z = tensor(z)
    y = np.asarray(y, dtype=np.float64).reshape(z.shape)
    zd = z.data
    loss = np.mean(np.maximum(zd, 0.0) - zd * y + np.log1p(np.exp(-np.abs(zd))))
    n = zd.size
    return _node(loss, (z,), lambda g: (g * (_sigmoid(zd) - y) / n,))


def sum_squares(a):
    a = tensor(a)
    return _node(np.sum(a.data * a.data), (a,), lambda g: (2.0 * g * a.data,))
