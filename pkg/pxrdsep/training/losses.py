"""
Loss terms of both training stages.

Every function accepts (..., L) tensors and treats the last axis as the
pattern, so K slot/target pairs are scored in one call.
"""

from dataclasses import dataclass

import numpy as np

from pxrdsep.autograd import ops
from pxrdsep.autograd.tensor import Tensor, as_tensor, expand
from pxrdsep.errors import LengthMismatch

SDR_EPS = 1e-8
SDR_RATIO_CAP = 1e8
SQRT_EPS = 1e-8


@dataclass(frozen=True)
class LossWeights:
    """
    Relative weights of the loss terms.

    Attributes
    ----------
    alpha_amp : float
        Peak emphasis of the amplitude term, ``|ŷ - y| (1 + α y)``
    lambda_shape : float
        Weight of the negative scale-invariant SDR
    beta_geo : float
        Weight of the second-difference part of the geometry term
    lambda_geo : float
        Weight of the square-root-domain geometry term
    lambda_act : float
        Weight of the slot-activity cross entropy
    lambda_mix : float
        Weight of the mixture-consistency term
    lambda_shape_pre, lambda_geo_pre : float
        Shape and geometry weights of the pretraining loss
    masked_only : bool
        Score pretraining reconstructions only where patches were hidden
    """

    alpha_amp: float = 2.0
    lambda_shape: float = 0.1
    beta_geo: float = 0.5
    lambda_geo: float = 1.0
    lambda_act: float = 0.5
    lambda_mix: float = 1.0
    lambda_shape_pre: float = 0.1
    lambda_geo_pre: float = 1.0
    masked_only: bool = False

    def __post_init__(self):
        for name, value in vars(self).items():
            if name != "masked_only" and value < 0.0:
                raise ValueError(f"Loss weight {name} must be >= 0: {value}")


def _check_pair(pred, target):
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise LengthMismatch(
            f"Prediction shape {pred.shape} differs from target shape {target.shape}"
        )
    return pred, target


def amplitude_term(pred, target, alpha):
    """Mean of ``|ŷ - y| · (1 + α y)`` along the pattern"""
    pred, target = _check_pair(pred, target)
    emphasis = Tensor(1.0 + alpha * target.data)
    return (ops.abs(pred - target) * emphasis).mean(axis=-1)


def si_sdr(pred, target):
    """
    Scale-invariant signal-to-distortion ratio in dB.

    The target is rescaled by ``<ŷ, y> / ||y||²``; both energies carry a
    small epsilon and the ratio is capped, so identical inputs score
    ``10 log10(1e8) = 80`` dB instead of infinity.
    """
    pred, target = _check_pair(pred, target)
    dot = (pred * target).sum(axis=-1)
    energy = (target * target).sum(axis=-1)
    scale = dot / (energy + SDR_EPS)
    if pred.ndim > 1:
        scale = expand(scale.reshape(scale.size, 1), target.shape)
    projected = scale * target
    residual = pred - projected
    signal = (projected * projected).sum(axis=-1) + SDR_EPS
    noise = (residual * residual).sum(axis=-1) + SDR_EPS
    ratio = ops.clip(signal / noise, high=SDR_RATIO_CAP)
    return ops.log(ratio) * (10.0 / np.log(10.0))


def _root(x):
    return ops.sqrt(ops.relu(x) + SQRT_EPS)


def _diff(x):
    n = x.shape[-1]
    return x[..., 1:n] - x[..., 0 : n - 1]


def geometry_term(pred, target, beta):
    """
    First- and second-difference mismatch of the square-root patterns.

    ``mean|∇√ŷ - ∇√y| + β · mean|∇²√ŷ - ∇²√y|``
    """
    pred, target = _check_pair(pred, target)
    d1 = _diff(_root(pred)) - _diff(_root(target))
    d2 = _diff(d1)
    return ops.abs(d1).mean(axis=-1) + ops.abs(d2).mean(axis=-1) * beta


def separation_loss(pred, target, weights, shape_weight=None, geo_weight=None):
    """
    Per-pair separation loss (amplitude, shape and geometry).

    Parameters
    ----------
    pred, target : Tensor
        (..., L) predictions and targets
    weights : LossWeights
        Term weights
    shape_weight, geo_weight : float (optional)
        Overrides of ``lambda_shape`` and ``lambda_geo``

    Returns
    -------
    Tensor
        One loss per leading index (scalar for 1D inputs)
    """
    shape_weight = weights.lambda_shape if shape_weight is None else shape_weight
    geo_weight = weights.lambda_geo if geo_weight is None else geo_weight
    loss = amplitude_term(pred, target, weights.alpha_amp)
    if shape_weight:
        loss = loss - si_sdr(pred, target) * shape_weight
    if geo_weight:
        loss = loss + geometry_term(pred, target, weights.beta_geo) * geo_weight
    return loss


loss_separation = separation_loss


def separation_costs(preds, targets, weights):
    """
    (K, K_max) matrix of separation losses of every target against every
    slot, evaluated on plain arrays.
    """
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape[-1] != targets.shape[-1]:
        raise LengthMismatch("Predictions and targets differ in length")
    K, k_max = len(targets), len(preds)
    pred_rows = np.repeat(preds[None, :, :], K, axis=0).reshape(K * k_max, -1)
    target_rows = np.repeat(targets[:, None, :], k_max, axis=1).reshape(K * k_max, -1)
    costs = separation_loss(Tensor(pred_rows), Tensor(target_rows), weights)
    return costs.data.reshape(K, k_max)


def activity_bce(logits, labels):
    """Mean binary cross entropy of slot logits against 0/1 labels"""
    logits = as_tensor(logits)
    labels = Tensor(np.asarray(labels, dtype=np.float64))
    return (ops.softplus(logits) - logits * labels).mean()


def mixture_consistency(reconstruction, x):
    """Mean absolute difference between the summed components and the input"""
    reconstruction, x = _check_pair(reconstruction, x)
    return ops.abs(reconstruction - x).mean()


def pretrain_loss(recon, target, weights, mask=None):
    """
    Masked-reconstruction objective.

    Parameters
    ----------
    recon, target : Tensor
        Reconstruction and single-phase pattern (L,)
    weights : LossWeights
        Uses ``alpha_amp``, ``beta_geo`` and the pretraining weights
    mask : np.ndarray of bool (optional)
        Grid points scored when ``weights.masked_only`` is set

    Returns
    -------
    Tensor
        Scalar loss
    """
    recon, target = _check_pair(recon, target)
    if weights.masked_only and mask is not None and np.any(mask):
        keep = np.flatnonzero(mask)
        recon = ops.take(recon.reshape(recon.shape[0], 1), keep).reshape(len(keep))
        target = Tensor(target.data[keep])
    return separation_loss(
        recon,
        target,
        weights,
        shape_weight=weights.lambda_shape_pre,
        geo_weight=weights.lambda_geo_pre,
    )
