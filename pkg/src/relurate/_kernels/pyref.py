"""Pure-numpy reference kernels.

Same contracts as the compiled extension in ``_ckern.pyx``; selected at
import time when the extension is unavailable (or forced via the
``RELURATE_KERNEL=py`` environment variable).
"""
import numpy as np

BACKEND = "py"

HINGE = 0
LOGISTIC = 1


def forward(weights, biases, X):
    """Evaluate the network on a batch.

    ``weights[l]`` has shape (out, in), ``biases[l]`` shape (out,); ReLU after
    every affine map except the last.  Returns an (n, out_dim) array.
    """
    H = np.asarray(X, dtype=float)
    last = len(weights) - 1
    for l, (W, b) in enumerate(zip(weights, biases)):
        H = H @ W.T + b
        if l != last:
            np.maximum(H, 0.0, out=H)
    return H


def loss_values(kind, z):
    z = np.asarray(z, dtype=float)
    if kind == HINGE:
        return np.maximum(1.0 - z, 0.0)
    return np.logaddexp(0.0, -z)


def loss_subgrad(kind, z):
    z = np.asarray(z, dtype=float)
    if kind == HINGE:
        return np.where(z < 1.0, -1.0, 0.0)
    # -sigmoid(-z), overflow-safe in both tails
    out = np.empty_like(z)
    pos = z >= 0
    ez = np.exp(-z[pos])
    out[pos] = -ez / (1.0 + ez)
    ez = np.exp(z[~pos])
    out[~pos] = -1.0 / (1.0 + ez)
    return out


def gradients(weights, biases, X, y, kind):
    """Mean-loss subgradients for a +-1 margin loss; returns (loss, gWs, gbs)."""
    acts = [np.asarray(X, dtype=float)]
    H = acts[0]
    last = len(weights) - 1
    for l in range(last):
        H = np.maximum(H @ weights[l].T + biases[l], 0.0)
        acts.append(H)
    f = (H @ weights[last].T + biases[last])[:, 0]
    z = y * f
    n = X.shape[0]
    loss = float(np.mean(loss_values(kind, z)))
    delta = (loss_subgrad(kind, z) * y / n)[:, None]
    gWs, gbs = [], []
    for l in range(last, -1, -1):
        gWs.append(delta.T @ acts[l])
        gbs.append(delta.sum(axis=0))
        if l > 0:
            delta = (delta @ weights[l]) * (acts[l] > 0.0)
    gWs.reverse()
    gbs.reverse()
    return loss, gWs, gbs


def train_step(weights, biases, wmasks, bmasks, X, y, kind, lr, clip):
    """One fused minibatch step: subgradient update, sparsity mask, clip.

    Mutates ``weights``/``biases`` in place and returns the pre-update
    minibatch loss.
    """
    loss, gWs, gbs = gradients(weights, biases, X, y, kind)
    for l in range(len(weights)):
        weights[l] -= lr * gWs[l]
        if wmasks is not None:
            weights[l] *= wmasks[l]
        np.clip(weights[l], -clip, clip, out=weights[l])
        biases[l] -= lr * gbs[l]
        if bmasks is not None:
            biases[l] *= bmasks[l]
        np.clip(biases[l], -clip, clip, out=biases[l])
    return loss
