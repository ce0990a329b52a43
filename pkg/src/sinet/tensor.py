"""Minimal reverse-mode autodiff over float64 numpy arrays.

Only the primitives the SINet network needs are provided. Each primitive
is a single graph node with a hand-written backward rule, so an LSTM layer
is one node whose backward runs full backpropagation through time. All
primitives accept optional leading batch dimensions.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, EmptyInputError, RankError

__all__ = [
    "Tensor",
    "LstmParams",
    "as_tensor",
    "tsum",
    "relu",
    "sigmoid",
    "conv1d_same",
    "maxpool1d",
    "dense",
    "lstm_layer_forward",
    "concat",
    "affine",
    "mse_loss",
    "GATE_ORDER",
]

GATE_ORDER = ("input", "forget", "cell", "output")


class Tensor:
    """Dense float64 array with optional gradient and graph linkage.

    ``grad`` is only populated on leaf tensors with ``requires_grad=True``;
    repeated :meth:`backward` calls accumulate into it until
    :meth:`zero_grad` is called.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name
        self._parents = ()
        self._backward = None

    @classmethod
    def _from_op(cls, data, parents, backward):
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.name = None
        out.requires_grad = any(p.requires_grad for p in parents)
        out._parents = tuple(parents) if out.requires_grad else ()
        out._backward = backward if out.requires_grad else None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self.data.item()

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data.copy())

    def __repr__(self):
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def backward(self):
        """Populate ``grad`` of every leaf reachable from this scalar.

        Traversal order is fixed by graph construction order, so repeated
        runs are bitwise reproducible.
        """
        if self.data.size != 1:
            raise RankError(f"backward() needs a scalar tensor, got shape {self.shape}")
        if not self.requires_grad:
            return

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
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))

        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg


class LstmParams:
    """Weights of one LSTM layer, gates packed in :data:`GATE_ORDER`.

    ``W`` is ``[input_dim, 4*hidden]``, ``U`` is ``[hidden, 4*hidden]`` and
    ``b`` is ``[4*hidden]``; column block ``k`` belongs to gate ``GATE_ORDER[k]``.
    """

    def __init__(self, W, U, b):
        self.W, self.U, self.b = W, U, b
        d, four_h = W.shape
        h = four_h // 4
        if four_h != 4 * h or U.shape != (h, four_h) or b.shape != (four_h,):
            raise DimensionError(
                f"inconsistent LSTM shapes W{W.shape} U{U.shape} b{b.shape}"
            )
        self.input_dim = d
        self.hidden_dim = h


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def tsum(x):
    """Sum of all elements as a scalar tensor."""
    x = as_tensor(x)

    def backward(g):
        return (np.broadcast_to(g, x.shape).copy(),)

    return Tensor._from_op(np.asarray(x.data.sum()), (x,), backward)


def relu(x):
    x = as_tensor(x)
    mask = x.data > 0

    def backward(g):
        return (g * mask,)

    return Tensor._from_op(np.where(mask, x.data, 0.0), (x,), backward)


def sigmoid(x):
    x = as_tensor(x)
    s = _sigmoid(x.data)

    def backward(g):
        return (g * s * (1.0 - s),)

    return Tensor._from_op(s, (x,), backward)


def affine(x, scale, shift):
    """``x*scale + shift`` with constant float ``scale`` and ``shift``."""
    x = as_tensor(x)

    def backward(g):
        return (g * scale,)

    return Tensor._from_op(x.data * scale + shift, (x,), backward)


def conv1d_same(x, kernels, bias):
    """Cross-correlation over time with symmetric zero padding.

    ``x`` is ``[..., T, Cin]``, ``kernels`` is ``[K, Cin, Cout]`` with odd
    ``K`` and ``bias`` is ``[Cout]``. Output is ``[..., T, Cout]``.
    """
    x, kernels, bias = as_tensor(x), as_tensor(kernels), as_tensor(bias)
    if kernels.ndim != 3 or x.ndim < 2:
        raise DimensionError(f"conv1d_same: input {x.shape} / kernels {kernels.shape}")
    K, cin, cout = kernels.shape
    if K % 2 == 0:
        raise DimensionError(f"conv1d_same: kernel size must be odd, got {K}")
    if x.shape[-1] != cin or bias.shape != (cout,):
        raise DimensionError(
            f"conv1d_same: input {x.shape} vs kernels {kernels.shape} / bias {bias.shape}"
        )
    T = x.shape[-2]
    if T < 1:
        raise EmptyInputError("conv1d_same: empty sequence")
    lead = x.shape[:-2]
    p = (K - 1) // 2
    xb = x.data.reshape((-1, T, cin))
    xp = np.pad(xb, ((0, 0), (p, p), (0, 0)))
    cols = np.stack([xp[:, k : k + T, :] for k in range(K)], axis=2)
    cols2 = cols.reshape(-1, K * cin)
    w2 = kernels.data.reshape(K * cin, cout)
    out = (cols2 @ w2 + bias.data).reshape(lead + (T, cout))

    def backward(g):
        g2 = g.reshape(-1, cout)
        gw = (cols2.T @ g2).reshape(K, cin, cout) if kernels.requires_grad else None
        gb = g2.sum(axis=0) if bias.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = (g2 @ w2.T).reshape(-1, T, K, cin)
            gxp = np.zeros_like(xp)
            for k in range(K):
                gxp[:, k : k + T, :] += gcols[:, :, k, :]
            gx = gxp[:, p : p + T, :].reshape(x.shape)
        return gx, gw, gb

    return Tensor._from_op(out, (x, kernels, bias), backward)


def maxpool1d(x, pool_size):
    """Non-overlapping max pooling over time; a short tail is dropped.

    Gradient flows to the first maximal element of each window.
    """
    x = as_tensor(x)
    if pool_size < 1:
        raise DimensionError(f"maxpool1d: pool_size must be >= 1, got {pool_size}")
    if x.ndim < 2:
        raise DimensionError(f"maxpool1d: expected [..., T, C], got {x.shape}")
    T, C = x.shape[-2:]
    n = T // pool_size
    if n == 0:
        raise EmptyInputError(
            f"maxpool1d: sequence length {T} shorter than pool size {pool_size}"
        )
    lead = x.shape[:-2]
    win = x.data.reshape((-1, T, C))[:, : n * pool_size, :].reshape(-1, n, pool_size, C)
    arg = win.argmax(axis=2)[:, :, None, :]
    out = np.take_along_axis(win, arg, axis=2)[:, :, 0, :].reshape(lead + (n, C))

    def backward(g):
        gwin = np.zeros_like(win)
        np.put_along_axis(gwin, arg, g.reshape(-1, n, 1, C), axis=2)
        gx = np.zeros((gwin.shape[0], T, C))
        gx[:, : n * pool_size, :] = gwin.reshape(-1, n * pool_size, C)
        return (gx.reshape(x.shape),)

    return Tensor._from_op(out, (x,), backward)


def dense(x, weight, bias, activation="linear"):
    """``activation(x @ weight + bias)`` for ``activation`` in {relu, linear}."""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if weight.ndim != 2 or x.ndim < 1 or x.shape[-1] != weight.shape[0]:
        raise DimensionError(f"dense: input {x.shape} vs weight {weight.shape}")
    if bias.shape != (weight.shape[1],):
        raise DimensionError(f"dense: bias {bias.shape} vs weight {weight.shape}")
    if activation not in ("relu", "linear"):
        raise ValueError(f"unknown activation {activation!r}")
    pre = x.data @ weight.data + bias.data
    if activation == "relu":
        mask = pre > 0
        out = np.where(mask, pre, 0.0)
    else:
        mask = None
        out = pre

    def backward(g):
        if mask is not None:
            g = g * mask
        x2 = x.data.reshape(-1, weight.shape[0])
        g2 = g.reshape(-1, weight.shape[1])
        gx = (g @ weight.data.T) if x.requires_grad else None
        gw = x2.T @ g2 if weight.requires_grad else None
        gb = g2.sum(axis=0) if bias.requires_grad else None
        return gx, gw, gb

    return Tensor._from_op(out, (x, weight, bias), backward)


def lstm_layer_forward(seq, params, return_sequence=True):
    """Run one LSTM layer from zero initial state.

    ``seq`` is ``[..., T, d]``. Returns ``[..., T, h]`` hidden states when
    ``return_sequence`` else the final hidden state ``[..., h]``.
    Gates: i, f, o sigmoid; g tanh; ``c = f*c_prev + i*g``; ``h = o*tanh(c)``.
    """
    seq = as_tensor(seq)
    W, U, b = as_tensor(params.W), as_tensor(params.U), as_tensor(params.b)
    if seq.ndim < 2:
        raise DimensionError(f"lstm: expected [..., T, d], got {seq.shape}")
    T, d = seq.shape[-2:]
    if T == 0:
        raise EmptyInputError("lstm: empty sequence")
    if d != params.input_dim:
        raise DimensionError(f"lstm: input {seq.shape} vs W {W.shape}")
    h = params.hidden_dim
    lead = seq.shape[:-2]
    x = seq.data.reshape(-1, T, d).transpose(1, 0, 2)  # time-major [T, B, d]
    B = x.shape[1]

    # sigmoid(z) = 0.5*tanh(z/2) + 0.5, so one tanh over all four gates
    # suffices once the sigmoid columns are pre-scaled by 1/2.
    scale = np.full(4 * h, 0.5)
    scale[2 * h : 3 * h] = 1.0
    offset = np.full(4 * h, 0.5)
    offset[2 * h : 3 * h] = 0.0
    xw = (x @ W.data + b.data) * scale
    Us = U.data * scale

    acts = np.empty((T, B, 4 * h))
    cs = np.empty((T + 1, B, h))
    hs = np.empty((T + 1, B, h))
    tcs = np.empty((T, B, h))
    cs[0] = 0.0
    hs[0] = 0.0
    for t in range(T):
        a = acts[t]
        np.tanh(xw[t] + hs[t] @ Us, out=a)
        a *= scale
        a += offset
        c = cs[t + 1]
        np.multiply(a[:, h : 2 * h], cs[t], out=c)
        c += a[:, :h] * a[:, 2 * h : 3 * h]
        np.tanh(c, out=tcs[t])
        np.multiply(a[:, 3 * h :], tcs[t], out=hs[t + 1])

    if return_sequence:
        out = hs[1:].transpose(1, 0, 2).reshape(lead + (T, h))
    else:
        out = hs[T].reshape(lead + (h,))

    def backward(g):
        if return_sequence:
            gh = g.reshape(B, T, h).transpose(1, 0, 2)
        else:
            gh = None
            gh_last = g.reshape(B, h)
        i, f, gg, o = (acts[..., k * h : (k + 1) * h] for k in range(4))
        # dz for the i, f, g blocks is dc times these factors; for o it is dh times ofac.
        pfac = np.stack(
            [gg * i * (1.0 - i), cs[:T] * f * (1.0 - f), i * (1.0 - gg * gg)], axis=2
        )  # [T, B, 3, h]
        ofac = tcs * o * (1.0 - o)
        cfac = o * (1.0 - tcs * tcs)
        dz = np.empty((T, B, 4, h))
        Ut = U.data.T
        dh = np.zeros((B, h)) if gh is not None else gh_last.copy()
        dc = np.zeros((B, h))
        for t in range(T - 1, -1, -1):
            if gh is not None:
                dh = dh + gh[t]
            dc = dc + dh * cfac[t]
            np.multiply(dc[:, None, :], pfac[t], out=dz[t, :, :3])
            np.multiply(dh, ofac[t], out=dz[t, :, 3])
            dc = dc * f[t]
            dh = dz[t].reshape(B, 4 * h) @ Ut
        dz2 = dz.reshape(-1, 4 * h)
        gW = x.reshape(-1, d).T @ dz2 if W.requires_grad else None
        gU = hs[:T].reshape(-1, h).T @ dz2 if U.requires_grad else None
        gb = dz2.sum(axis=0) if b.requires_grad else None
        gx = None
        if seq.requires_grad:
            gx = (dz2 @ W.data.T).reshape(T, B, d).transpose(1, 0, 2).reshape(seq.shape)
        return gx, gW, gU, gb

    return Tensor._from_op(out, (seq, W, U, b), backward)


def concat(a, b):
    """Join along the last axis; leading dimensions must agree."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 1 or b.ndim < 1 or a.shape[:-1] != b.shape[:-1]:
        raise DimensionError(f"concat: incompatible shapes {a.shape} and {b.shape}")
    n = a.shape[-1]

    def backward(g):
        return g[..., :n], g[..., n:]

    return Tensor._from_op(np.concatenate([a.data, b.data], axis=-1), (a, b), backward)


def mse_loss(pred, target):
    """Mean of squared differences as a scalar tensor."""
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise DimensionError(f"mse_loss: pred {pred.shape} vs target {target.shape}")
    n = pred.size
    if n == 0:
        raise EmptyInputError("mse_loss: empty batch")
    diff = pred.data - target.data

    def backward(g):
        gp = g * (2.0 / n) * diff
        return gp, -gp

    return Tensor._from_op(np.asarray(np.mean(diff * diff)), (pred, target), backward)
