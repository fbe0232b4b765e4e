"""Synthetic phantoms and cohorts for demos and tests."""

from __future__ import annotations

import numpy as np

from .survival import ClinicalRecord, FeatureMatrix
from .volume import LabelVolume, Volume3D


def ball(dims, center, radius, spacing=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Boolean mask of voxels within ``radius`` mm of ``center`` (voxel coordinates)."""
    grids = np.meshgrid(*(np.arange(n) for n in dims), indexing="ij")
    d2 = sum(((g - c) * s) ** 2 for g, c, s in zip(grids, center, spacing))
    return d2 <= radius * radius


def tumor_phantom(dims=(64, 64, 64), center=None, radii=(18.0, 11.0, 7.0), spacing=(1.0, 1.0, 1.0)) -> LabelVolume:
    """Concentric tumor: edema shell, enhancing rim, necrotic centre."""
    if center is None:
        center = tuple((n - 1) / 2 for n in dims)
    wt, tc, core = (ball(dims, center, r, spacing) for r in radii)
    labels = np.zeros(dims, dtype=np.uint8)
    labels[wt] = 2
    labels[tc] = 4
    labels[core] = 1
    return LabelVolume(labels, spacing)


def perturb_segmentation(seg: LabelVolume, seed: int = 0, shift=(1, 0, 0), n_spots: int = 5) -> LabelVolume:
    """Shift a segmentation and sprinkle isolated enhancing voxels, mimicking model error."""
    rng = np.random.default_rng(seed)
    labels = np.roll(seg.labels, shift, axis=(0, 1, 2))
    for _ in range(n_spots):
        idx = tuple(int(rng.integers(0, n)) for n in labels.shape)
        labels[idx] = 4
    return LabelVolume(labels, seg.spacing)


def mri_phantom(seg: LabelVolume, seed: int = 0, noise: float = 0.05) -> Volume3D:
    """Smooth intensity image whose brightness follows the labels."""
    rng = np.random.default_rng(seed)
    base = {0: 0.2, 1: 0.4, 2: 0.7, 4: 1.0}
    img = np.zeros(seg.dims)
    for label, value in base.items():
        img[seg.labels == label] = value
    img += noise * rng.standard_normal(seg.dims)
    return Volume3D(img, seg.spacing)


def survival_cohort(n_cases: int = 200, n_features: int = 256, seed: int = 0, intercept: float = float(np.log(380.0)),
                    slope: float = 0.6, noise: float = 0.1, n_latent: int = 3, labeled: bool = True):
    """Cohort whose survival depends on one latent factor of the features.

    Features are ``Z @ W + 0.05 * eps`` with ``n_latent`` Gaussian factors
    ``Z``; survival is ``exp(intercept + slope * Z[:, 0]) * lognormal(noise)``.
    The first factor has the largest loading scale, so it dominates the top
    principal component.

    Returns:
        ``(features, clinical, latent)``.
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_cases, n_latent))
    scales = np.linspace(3.0, 1.5, n_latent)
    w = rng.standard_normal((n_latent, n_features)) / np.sqrt(n_features) * scales[:, None] * 4
    x = z @ w + 0.05 * rng.standard_normal((n_cases, n_features))
    os_days = np.exp(intercept + slope * z[:, 0] + noise * rng.standard_normal(n_cases))
    ages = np.clip(rng.normal(61.0, 12.0, n_cases), 19.0, 89.0)
    resections = rng.choice(["GTR", "STR", "NA"], size=n_cases, p=[0.5, 0.05, 0.45])
    ids = [f"case_{i:04d}" for i in range(n_cases)]
    clinical = [
        ClinicalRecord(c, float(a), str(r), float(o) if labeled else None)
        for c, a, r, o in zip(ids, ages, resections, os_days)
    ]
    return FeatureMatrix(tuple(ids), x), clinical, z
