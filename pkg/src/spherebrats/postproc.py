"""Label-space fusion and cleanup of tumor segmentations.

Every function returning a :class:`LabelVolume` rebuilds labels from region
masks so that ET <= TC <= WT holds in the output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import ndimage

from .volume import LabelVolume, check_same_grid, compose_labels, region_mask


@dataclass(frozen=True)
class StructuringElement:
    """Set of integer voxel offsets, symmetric and containing the centre."""

    offsets: frozenset = field(default_factory=lambda: frozenset(CROSS_OFFSETS))

    def __post_init__(self):
        offsets = frozenset(tuple(int(v) for v in o) for o in self.offsets)
        if any(len(o) != 3 for o in offsets):
            raise ValueError("offsets must be (di, dj, dk) triples")
        if (0, 0, 0) not in offsets:
            raise ValueError("structuring element must contain (0, 0, 0)")
        if any((-a, -b, -c) not in offsets for a, b, c in offsets):
            raise ValueError("structuring element must be symmetric under negation")
        object.__setattr__(self, "offsets", offsets)

    @classmethod
    def cross(cls) -> "StructuringElement":
        """Centre voxel plus its 6 face neighbours."""
        return cls(frozenset(CROSS_OFFSETS))

    @classmethod
    def cube(cls, radius: int = 1) -> "StructuringElement":
        r = range(-radius, radius + 1)
        return cls(frozenset(product(r, r, r)))

    def to_array(self) -> np.ndarray:
        r = max(max(abs(v) for v in o) for o in self.offsets)
        arr = np.zeros((2 * r + 1,) * 3, dtype=bool)
        for a, b, c in self.offsets:
            arr[a + r, b + r, c + r] = True
        return arr


CROSS_OFFSETS = ((0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


@dataclass(frozen=True)
class EtCleanupParams:
    min_component_voxels: int = 30
    opening_iterations: int = 1
    connectivity: int = 26

    def __post_init__(self):
        if self.min_component_voxels < 1:
            raise ValueError("min_component_voxels must be >= 1")
        if self.opening_iterations < 1:
            raise ValueError("opening_iterations must be >= 1")
        if self.connectivity not in (6, 26):
            raise ValueError("connectivity must be 6 or 26")


def binary_opening(mask, se: StructuringElement | None = None, iterations: int = 1) -> np.ndarray:
    """``iterations`` erosions then ``iterations`` dilations; outside the volume counts as background."""
    mask = np.asarray(mask, dtype=bool)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    structure = (se or StructuringElement.cross()).to_array()
    eroded = ndimage.binary_erosion(mask, structure, iterations=iterations, border_value=0)
    return ndimage.binary_dilation(eroded, structure, iterations=iterations, border_value=0)


def _connectivity_structure(connectivity: int) -> np.ndarray:
    if connectivity == 6:
        return ndimage.generate_binary_structure(3, 1)
    if connectivity == 26:
        return ndimage.generate_binary_structure(3, 3)
    raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")


def filter_small_components(mask, min_voxels: int = 30, connectivity: int = 26) -> np.ndarray:
    """Drop connected components with fewer than ``min_voxels`` voxels."""
    if min_voxels < 1:
        raise ValueError("min_voxels must be >= 1")
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=_connectivity_structure(connectivity))
    if n == 0:
        return mask.copy()
    sizes = np.bincount(labels.ravel())
    keep = sizes >= min_voxels
    keep[0] = False
    return keep[labels]


def cartesian_wt_filter(spherical_seg: LabelVolume, cartesian_seg: LabelVolume) -> LabelVolume:
    """Zero every spherical-model voxel lying outside the Cartesian model's whole tumor."""
    check_same_grid(spherical_seg, cartesian_seg, "spherical and Cartesian segmentations")
    out = spherical_seg.labels.copy()
    out[~region_mask(cartesian_seg, "WT")] = 0
    return LabelVolume(out, spherical_seg.spacing)


def intersect_3ch(seg_a: LabelVolume, seg_b: LabelVolume) -> LabelVolume:
    """Intersect ET, TC and WT separately, then recompose the labels."""
    check_same_grid(seg_a, seg_b, "segmentations")
    masks = [region_mask(seg_a, r) & region_mask(seg_b, r) for r in ("ET", "TC", "WT")]
    return LabelVolume(compose_labels(*masks), seg_a.spacing)


def et_restore_or_erase(seg: LabelVolume, params: EtCleanupParams | None = None) -> LabelVolume:
    """Keep the ET label only if something survives opening and size filtering.

    If the cleaned ET mask is non-empty the input is returned untouched.
    Otherwise every enhancing voxel becomes necrosis, so TC and WT keep
    their extent.
    """
    params = params or EtCleanupParams()
    et = region_mask(seg, "ET")
    opened = binary_opening(et, StructuringElement.cross(), params.opening_iterations)
    cleaned = filter_small_components(opened, params.min_component_voxels, params.connectivity)
    if cleaned.any():
        return LabelVolume(seg.labels.copy(), seg.spacing)
    out = seg.labels.copy()
    out[et] = 1
    return LabelVolume(out, seg.spacing)


def ensemble_merge(seg_et_source: LabelVolume, seg_wt_tc_source: LabelVolume) -> LabelVolume:
    """ET from the first model, TC and WT from the second, nesting forced by union."""
    check_same_grid(seg_et_source, seg_wt_tc_source, "segmentations")
    et = region_mask(seg_et_source, "ET")
    tc = region_mask(seg_wt_tc_source, "TC") | et
    wt = region_mask(seg_wt_tc_source, "WT") | et
    return LabelVolume(compose_labels(et, tc, wt), seg_wt_tc_source.spacing)


def nesting_holds(seg) -> bool:
    """True when ET <= TC <= WT voxel-wise."""
    et, tc, wt = (region_mask(seg, r) for r in ("ET", "TC", "WT"))
    return bool(np.all(~et | tc) and np.all(~tc | wt))

