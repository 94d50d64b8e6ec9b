"""Adam with bias-corrected moments, updating parameters in place."""

import numpy as np

from ..errors import NumericError


def adam_step(params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-7):
    """One Adam update from each parameter's ``.grad``.

    Parameters without a gradient are skipped. A non-finite gradient aborts
    before anything is modified.
    """
    live = [p for p in params if p.grad is not None]
    for p in live:
        if p.grad.shape != p.data.shape:
            raise NumericError(f"{p.name}: gradient shape {p.grad.shape} != {p.data.shape}")
        if not np.all(np.isfinite(p.grad)):
            raise NumericError(f"non-finite gradient in parameter {p.name!r}")
    for p in live:
        dt = p.data.dtype.type
        g = p.grad
        p.step_count += 1
        t = p.step_count
        p.adam_m *= dt(beta1)
        p.adam_m += dt(1 - beta1) * g
        p.adam_v *= dt(beta2)
        p.adam_v += dt(1 - beta2) * (g * g)
        m_hat = p.adam_m / dt(1 - beta1 ** t)
        v_hat = p.adam_v / dt(1 - beta2 ** t)
        p.data -= dt(lr) * m_hat / (np.sqrt(v_hat) + dt(eps))


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-7):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        adam_step(self.params, self.lr, self.beta1, self.beta2, self.eps)
