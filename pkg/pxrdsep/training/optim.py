import math
from collections import OrderedDict

import numpy as np


class AdamW:
    """
    Adaptive moments with decoupled weight decay.

    Parameters
    ----------
    params : list of Tensor
        Parameters to update; those without gradients are skipped
    lr : float
        Base learning rate (overridden per step by a schedule)
    betas : (float, float)
        Moment decay rates
    eps : float
        Denominator offset
    weight_decay : float
        Decoupled decay coefficient
    """

    def __init__(
        self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.05
    ):
        if lr <= 0.0:
            raise ValueError(f"Learning rate must be positive: {lr}")
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self, lr=None):
        lr = self.lr if lr is None else lr
        b1, b2 = self.betas
        self.t += 1
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None or not p.requires_grad:
                continue
            g = p.grad
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data *= 1.0 - lr * self.weight_decay
            p.data -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def cosine_schedule(step, total_steps, warmup_steps, base_lr):
    """Linear warmup to ``base_lr`` followed by cosine decay to zero"""
    if warmup_steps > 0 and step < warmup_steps:
        return base_lr * (step + 1) / warmup_steps
    span = max(total_steps - warmup_steps, 1)
    progress = min(max(step - warmup_steps, 0) / span, 1.0)
    return 0.5 * base_lr * (1.0 + math.cos(math.pi * progress))


class EMA:
    """
    Exponential moving average of a model's parameters,
    ``θ_ema <- d θ_ema + (1 - d) θ``.
    """

    def __init__(self, model, decay=0.999):
        if not 0.0 <= decay < 1.0:
            raise ValueError(f"EMA decay must lie in [0, 1): {decay}")
        self.decay = decay
        self.shadow = model.state_dict()

    def reset(self, model):
        self.shadow = model.state_dict()

    def update(self, model, decay=None):
        d = self.decay if decay is None else decay
        for name, p in model.named_parameters():
            shadow = self.shadow[name]
            if not p.requires_grad:
                shadow[...] = p.data
                continue
            shadow *= d
            shadow += (1.0 - d) * p.data

    def state_dict(self):
        return OrderedDict((k, v.copy()) for k, v in self.shadow.items())
