"""
Tensors, layers and gradients
Walks through the building blocks of the network by hand: a convolution,
pooling, an LSTM step, and a finite-difference check of the backward pass.
"""

import numpy as np

from sinet import tensor as T
from sinet.adam import Adam
from sinet.gradcheck import audit, check_gradients

print("=" * 50)
print(" 1. Convolution with 'same' padding")
print("=" * 50)

# a length-3 signal and a difference kernel
x = T.Tensor(np.array([[1.0], [2.0], [3.0]]))
k = T.Tensor(np.array([1.0, 0.0, -1.0]).reshape(3, 1, 1))
y = T.conv1d_same(x, k, T.Tensor(np.zeros(1)))
print("input :", x.data[:, 0])
print("output:", y.data[:, 0])  # [-2, -2, 2]: no kernel flip, zero padding at both ends

print("\n" + "=" * 50)
print(" 2. Max pooling keeps floor(T / 2) steps")
print("=" * 50)
seq = T.Tensor(np.arange(41.0).reshape(41, 1))
print("41 steps ->", T.maxpool1d(seq, 2).shape[0], "steps")

print("\n" + "=" * 50)
print(" 3. One LSTM layer")
print("=" * 50)
rng = np.random.default_rng(0)
d, h = 3, 2
params = T.LstmParams(T.Tensor(rng.normal(size=(d, 4 * h))),
                      T.Tensor(rng.normal(size=(h, 4 * h))),
                      T.Tensor(np.zeros(4 * h)))
hidden = T.lstm_layer_forward(T.Tensor(rng.normal(size=(5, d))), params, return_sequence=True)
print("gate order:", T.GATE_ORDER)
print("hidden states, shape", hidden.shape)
print(np.round(hidden.data, 4))

print("\n" + "=" * 50)
print(" 4. Backward pass vs central differences")
print("=" * 50)
W = T.Tensor(rng.normal(size=(4, 2)), requires_grad=True)
b = T.Tensor(np.zeros(2), requires_grad=True)
xb = T.Tensor(rng.normal(size=(6, 4)))
target = rng.normal(size=(6, 2))
for r in check_gradients(lambda: T.mse_loss(T.dense(xb, W, b, "relu"), target), {"W": W, "b": b}):
    print(f"{r.name}: max relative error {r.max_rel_error:.2e}")

# the whole audit: every primitive plus a tiny dual-branch network
results = audit(seed=1)
worst = max(r.max_rel_error for _, r in results)
print(f"full audit, seed 1: {sum(r.passed for _, r in results)}/{len(results)} checks pass, worst {worst:.2e}")

print("\n" + "=" * 50)
print(" 5. Adam on f(w) = w^2")
print("=" * 50)
w = T.Tensor(np.array([1.0]), requires_grad=True)
opt = Adam({"w": w}, learning_rate=0.1)
for step in range(1, 6):
    opt.zero_grad()
    T.mse_loss(w, np.zeros(1)).backward()
    opt.step()
    print(f"step {step}: w = {w.data[0]:.5f}")
