"""Central finite-difference gradient checks (float64)."""

import numpy as np

from .tensor import Tensor, weighted_sum


def _rel_err(a, n):
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)


def grad_check(fn, inputs, params=(), h=1e-4, seed=0):
    """Max relative error between analytic and numeric gradients.

    ``fn`` maps input Tensors to an output Tensor. Non-scalar outputs are
    reduced with a fixed random weighting so every output element matters.
    ``inputs`` are arrays (converted to float64 Tensors that require grad);
    ``params`` are Tensors already owned by the op (e.g. layer parameters),
    which must hold float64 data.
    """
    rng = np.random.default_rng(seed)
    xs = [Tensor(np.array(x, dtype=np.float64), requires_grad=True) for x in inputs]
    params = list(params)
    weights = None

    def scalar():
        nonlocal weights
        out = fn(*xs)
        if out.data.size == 1:
            return out
        if weights is None:
            weights = rng.uniform(0.5, 1.5, size=out.shape) * rng.choice([-1.0, 1.0], size=out.shape)
        return weighted_sum(out, weights)

    for t in xs + params:
        t.grad = None
    scalar().backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else np.array(t.grad) for t in xs + params]

    worst = 0.0
    for t, a in zip(xs + params, analytic):
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(scalar().data)
            flat[i] = orig - h
            fm = float(scalar().data)
            flat[i] = orig
            num = (fp - fm) / (2 * h)
            worst = max(worst, float(_rel_err(a.reshape(-1)[i], num)))
    return worst
