"""Loss terms of the VAE-regularised segmentation network, as plain numpy.

The total loss is ``L = L_dice + w_l2 * L_l2 + w_kl * L_kl`` with weights
0.1 / 0.1 by default; the bisCartesian variant lowers ``w_kl`` to 1e-4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .volume import check_same_grid, volume_array


@dataclass(frozen=True)
class LossWeights:
    w_l2: float = 0.1
    w_kl: float = 0.1

    def __post_init__(self):
        if self.w_l2 < 0 or self.w_kl < 0:
            raise ValueError("loss weights must be >= 0")


DEFAULT_WEIGHTS = LossWeights()
BISCARTESIAN_WEIGHTS = LossWeights(w_l2=0.1, w_kl=0.0001)


@dataclass(frozen=True, eq=False)
class GaussianLatent:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64))
        if mu.shape != sigma.shape:
            raise ValueError(f"mu and sigma shapes differ: {mu.shape} vs {sigma.shape}")
        if not np.all(sigma > 0):
            raise ValueError("sigma must be strictly positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)


def soft_dice_loss(pred_probs, target, epsilon: float = 1e-7) -> float:
    """``1 - 2 sum(p t) / (sum(p^2) + sum(t^2) + eps)``."""
    check_same_grid(pred_probs, target, "prediction and target")
    p = np.asarray(volume_array(pred_probs), dtype=np.float64)
    t = np.asarray(volume_array(target), dtype=np.float64)
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    return float(1.0 - 2.0 * np.sum(p * t) / (np.sum(p * p) + np.sum(t * t) + epsilon))


def l2_loss(recon, target) -> float:
    """Mean squared difference between reconstruction and input."""
    check_same_grid(recon, target, "reconstruction and input")
    diff = np.asarray(volume_array(recon), dtype=np.float64) - np.asarray(volume_array(target), dtype=np.float64)
    return float(np.mean(diff * diff))


def kl_gaussian(latent: GaussianLatent) -> float:
    """KL penalty ``mean(mu^2 + sigma^2 - log sigma^2 - 1)`` over latent dimensions.

    This is twice the per-dimension KL divergence to N(0, 1).
    """
    mu, s2 = latent.mu, latent.sigma ** 2
    return float(np.mean(mu * mu + s2 - np.log(s2) - 1.0))


def kl_gaussian_grad(latent: GaussianLatent) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of :func:`kl_gaussian` with respect to ``(mu, sigma)``."""
    n = latent.mu.size
    return 2.0 * latent.mu / n, (2.0 * latent.sigma - 2.0 / latent.sigma) / n


def composite_loss(l_dice: float, l_l2: float, l_kl: float, weights: LossWeights = DEFAULT_WEIGHTS) -> float:
    return l_dice + weights.w_l2 * l_l2 + weights.w_kl * l_kl
