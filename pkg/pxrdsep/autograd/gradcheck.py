import numpy as np

from pxrdsep.autograd.tensor import Tensor, no_grad

GRADCHECK_FLOOR = 1e-3


def relative_error(analytic, numeric, floor=GRADCHECK_FLOOR):
    """Elementwise ``|a - n| / max(|a|, |n|, floor)``"""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def finite_diff_check(func, inputs, eps=1e-5, floor=GRADCHECK_FLOOR, seed=0):
    """
    Compare analytic gradients against central finite differences.

    Non-scalar outputs are reduced with a fixed random projection so every
    output element contributes to the checked gradient.

    Parameters
    ----------
    func : callable
        Maps the input Tensors to an output Tensor
    inputs : list of Tensor
        Inputs; only those with ``requires_grad`` are checked
    eps : float
        Central-difference step
    floor : float
        Denominator floor of the relative error
    seed : int
        Seed of the output projection

    Returns
    -------
    float
        Maximum relative error over all checked input elements
    """
    out = func(*inputs)
    projection = np.random.default_rng(seed).standard_normal(out.shape)

    for t in inputs:
        t.zero_grad()
    (out * Tensor(projection)).sum().backward()

    def objective():
        with no_grad():
            return float(np.sum(func(*inputs).data * projection))

    worst = 0.0
    for t in inputs:
        if not t.requires_grad:
            continue
        analytic = np.zeros_like(t.data) if t.grad is None else t.grad
        numeric = np.empty_like(t.data)
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            plus = objective()
            flat[i] = original - eps
            minus = objective()
            flat[i] = original
            numeric.reshape(-1)[i] = (plus - minus) / (2.0 * eps)
        worst = max(worst, float(relative_error(analytic, numeric, floor).max()))
    return worst
