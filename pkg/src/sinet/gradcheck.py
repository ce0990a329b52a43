"""Central finite-difference gradient auditing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["relative_error", "numerical_gradient", "check_gradients", "GradcheckResult"]


def relative_error(analytic, numeric, floor=1e-3):
    """Elementwise ``|a - n| / max(|a|, |n|, floor)``.

    The floor keeps entries whose true gradient is near zero from being
    judged against round-off noise of order ``eps * |f| / h``.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def numerical_gradient(f, x, h=1e-5):
    """Central differences of scalar ``f()`` with respect to array ``x``.

    ``x`` is perturbed in place and restored exactly.
    """
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


@dataclass
class GradcheckResult:
    name: str
    max_rel_error: float
    n_entries: int
    tolerance: float

    @property
    def passed(self):
        return self.max_rel_error <= self.tolerance


def check_gradients(loss_fn, tensors, h=1e-5, tol=1e-6, floor=1e-3):
    """Compare reverse-mode gradients with finite differences.

    ``loss_fn`` builds a fresh graph and returns a scalar Tensor;
    ``tensors`` maps names to leaf Tensors with ``requires_grad=True``.
    Returns one :class:`GradcheckResult` per tensor.
    """
    for t in tensors.values():
        t.grad = None
    loss_fn().backward()
    analytic = {k: (t.grad if t.grad is not None else np.zeros_like(t.data)).copy()
                for k, t in tensors.items()}

    def scalar():
        return float(loss_fn().data)

    results = []
    for name, t in tensors.items():
        num = numerical_gradient(scalar, t.data, h)
        err = relative_error(analytic[name], num, floor)
        results.append(GradcheckResult(name, float(err.max(initial=0.0)), err.size, tol))
    return results


PRIMITIVE_TOL = 1e-6
COMPOSITE_TOL = 1e-5


def _leaf(rng, *shape, scale=1.0):
    from .tensor import Tensor

    return Tensor(rng.normal(size=shape) * scale, requires_grad=True)


def primitive_cases(rng):
    """(label, loss_fn, tensors) for every differentiable primitive."""
    from . import tensor as T

    cases = []
    x = _leaf(rng, 2, 7, 3)
    k = _leaf(rng, 3, 3, 4)
    b = _leaf(rng, 4)
    tgt = rng.normal(size=(2, 7, 4))
    cases.append(("conv1d_same", lambda: T.mse_loss(T.conv1d_same(x, k, b), tgt), dict(input=x, kernels=k, bias=b)))

    xp = _leaf(rng, 2, 9, 3)
    tgt_p = rng.normal(size=(2, 4, 3))
    cases.append(("maxpool1d", lambda: T.mse_loss(T.maxpool1d(xp, 2), tgt_p), dict(input=xp)))

    for act in ("relu", "linear"):
        xd = _leaf(rng, 3, 5)
        w = _leaf(rng, 5, 4)
        bd = _leaf(rng, 4)
        tgt_d = rng.normal(size=(3, 4))
        cases.append((f"dense[{act}]", lambda xd=xd, w=w, bd=bd, tgt_d=tgt_d, act=act:
                      T.mse_loss(T.dense(xd, w, bd, act), tgt_d), dict(input=xd, weight=w, bias=bd)))

    for ret_seq in (True, False):
        xs = _leaf(rng, 2, 6, 3)
        W = _leaf(rng, 3, 16, scale=0.5)
        U = _leaf(rng, 4, 16, scale=0.5)
        bl = _leaf(rng, 16, scale=0.5)
        shape = (2, 6, 4) if ret_seq else (2, 4)
        tgt_l = rng.normal(size=shape)
        cases.append((f"lstm[{'sequence' if ret_seq else 'final'}]",
                      lambda xs=xs, W=W, U=U, bl=bl, tgt_l=tgt_l, ret_seq=ret_seq:
                      T.mse_loss(T.lstm_layer_forward(xs, T.LstmParams(W, U, bl), ret_seq), tgt_l),
                      dict(input=xs, W=W, U=U, b=bl)))

    a = _leaf(rng, 2, 3)
    c = _leaf(rng, 2, 4)
    tgt_c = rng.normal(size=(2, 7))
    cases.append(("concat", lambda: T.mse_loss(T.concat(a, c), tgt_c), dict(a=a, b=c)))

    pred = _leaf(rng, 5)
    y = _leaf(rng, 5)
    cases.append(("mse_loss", lambda: T.mse_loss(pred, y), dict(pred=pred, target=y)))

    xr = _leaf(rng, 4, 3)
    tgt_r = rng.normal(size=(4, 3))
    cases.append(("relu", lambda: T.mse_loss(T.relu(xr), tgt_r), dict(input=xr)))
    xs2 = _leaf(rng, 4, 3)
    cases.append(("sigmoid", lambda: T.mse_loss(T.sigmoid(xs2), tgt_r), dict(input=xs2)))
    xa = _leaf(rng, 4, 3)
    cases.append(("affine", lambda: T.mse_loss(T.affine(xa, 0.7, -2.0), tgt_r), dict(input=xa)))
    xt = _leaf(rng, 3, 2)
    cases.append(("sum", lambda: T.tsum(xt), dict(input=xt)))
    return cases


def composite_case(rng, variant="dual"):
    """Tiny full network on a 2-sample batch."""
    from . import tensor as T
    from .encoding import EncoderSpec, Vocabulary, encode_batch
    from .model import SinetConfig, build_model, forward

    sv = Vocabulary(("(", ")", "=", "C", "O"), True)
    iv = Vocabulary(("/", "1", "2", "=", "C", "H", "I", "h", "n"), True)
    cfg = SinetConfig(sv, iv, variant, smiles_len=6, inchi_len=10, conv_filters=3,
                      lstm_units=3, dense_units=4)
    model = build_model(cfg, seed=int(rng.integers(2**31)))
    for t in model.params.values():
        t.data += rng.normal(size=t.shape) * 0.1
    xs = encode_batch(["C(=O)C", "CCO"], EncoderSpec(sv, 6))
    xi = encode_batch(["InChI=1/C2", "InChI=/h1"], EncoderSpec(iv, 10))
    y = rng.normal(size=2)
    return lambda: T.mse_loss(forward(model, xs, xi), y), dict(model.params)


def audit(seed, h=1e-5):
    """Gradient audit for one seed: list of (label, GradcheckResult)."""
    rng = np.random.default_rng(seed)
    out = []
    for label, fn, tensors in primitive_cases(rng):
        for r in check_gradients(fn, tensors, h=h, tol=PRIMITIVE_TOL):
            out.append((f"{label}.{r.name}", r))
    fn, tensors = composite_case(rng)
    for r in check_gradients(fn, tensors, h=h, tol=COMPOSITE_TOL):
        out.append((f"sinet[dual].{r.name}", r))
    return out
