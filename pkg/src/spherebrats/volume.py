"""Dense 3D grids, interpolated sampling and BraTS region masks.

Arrays are indexed ``data[i, j, k]`` with ``i`` along x. On disk (NIfTI) the
order is x-fastest, which is Fortran order for these arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

LABEL_VALUES = (0, 1, 2, 4)
NECROSIS, EDEMA, ENHANCING = 1, 2, 4
REGIONS = ("ET", "TC", "WT")

_REGION_LABELS = {
    "ET": (ENHANCING,),
    "TC": (NECROSIS, ENHANCING),
    "WT": (NECROSIS, EDEMA, ENHANCING),
}


def _check_spacing(spacing) -> tuple[float, float, float]:
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != 3:
        raise ValueError(f"spacing must have 3 components, got {len(spacing)}")
    if not all(math.isfinite(s) and s > 0 for s in spacing):
        raise ValueError(f"spacing must be finite and > 0, got {spacing}")
    return spacing


@dataclass(frozen=True, eq=False)
class Volume3D:
    """Scalar 3D grid with voxel spacing in mm."""

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or min(data.shape) < 1:
            raise ValueError(f"Volume3D needs a non-empty 3D array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("Volume3D data must be finite")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.data.shape)


@dataclass(frozen=True, eq=False)
class LabelVolume:
    """Segmentation with BraTS labels: 0 background, 1 necrosis, 2 edema, 4 enhancing."""

    labels: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 3 or min(labels.shape) < 1:
            raise ValueError(f"LabelVolume needs a non-empty 3D array, got shape {labels.shape}")
        if labels.dtype.kind == "f":
            if not np.all(labels == np.round(labels)):
                raise ValueError("labels must be integers")
        elif labels.dtype.kind not in "iub":
            raise ValueError(f"labels must be integers, got dtype {labels.dtype}")
        bad = ~np.isin(labels, LABEL_VALUES)
        if bad.any():
            raise ValueError(f"label values must be in {LABEL_VALUES}, found {np.unique(labels[bad])[:5]}")
        object.__setattr__(self, "labels", labels.astype(np.uint8))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.labels.shape)


AnyVolume = Union[Volume3D, LabelVolume]


def volume_array(vol) -> np.ndarray:
    """Return the voxel array of a Volume3D, a LabelVolume or a plain array."""
    if isinstance(vol, Volume3D):
        return vol.data
    if isinstance(vol, LabelVolume):
        return vol.labels
    return np.asarray(vol)


def check_same_grid(a, b, what: str = "volumes") -> None:
    """Raise ValueError unless ``a`` and ``b`` share dims (and spacing, when both carry one)."""
    sa, sb = volume_array(a).shape, volume_array(b).shape
    if sa != sb:
        raise ValueError(f"{what} have mismatched dims {sa} vs {sb}")
    spa, spb = getattr(a, "spacing", None), getattr(b, "spacing", None)
    if spa is not None and spb is not None and not np.allclose(spa, spb, rtol=1e-6, atol=0):
        raise ValueError(f"{what} have mismatched spacing {spa} vs {spb}")


def _check_point(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (3,):
        raise ValueError(f"point must have 3 coordinates, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point coordinates must be finite, got {p}")
    return p


def _lerp(a, b, t):
    # a + t*(b - a) keeps constants exact; clipping keeps the result inside [a, b]
    out = a + t * (b - a)
    return np.clip(out, np.minimum(a, b), np.maximum(a, b))


def interpolate_trilinear(data: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Trilinear interpolation of ``data`` at continuous voxel coordinates.

    Args:
        data: 3D array.
        coords: array of shape ``(3, ...)`` holding x, y, z voxel coordinates.

    Returns:
        Array of shape ``coords.shape[1:]``. Points with any coordinate outside
        ``[0, dim - 1]`` get 0.
    """
    data = np.asarray(data, dtype=np.float64)
    coords = np.asarray(coords, dtype=np.float64)
    x, y, z = coords
    nx, ny, nz = data.shape
    inside = (x >= 0) & (x <= nx - 1) & (y >= 0) & (y <= ny - 1) & (z >= 0) & (z <= nz - 1)

    xs, ys, zs = (np.where(inside, c, 0.0) for c in (x, y, z))
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    z0 = np.floor(zs).astype(np.intp)
    x1 = np.minimum(x0 + 1, nx - 1)
    y1 = np.minimum(y0 + 1, ny - 1)
    z1 = np.minimum(z0 + 1, nz - 1)
    tx, ty, tz = xs - x0, ys - y0, zs - z0

    c00 = _lerp(data[x0, y0, z0], data[x1, y0, z0], tx)
    c10 = _lerp(data[x0, y1, z0], data[x1, y1, z0], tx)
    c01 = _lerp(data[x0, y0, z1], data[x1, y0, z1], tx)
    c11 = _lerp(data[x0, y1, z1], data[x1, y1, z1], tx)
    c0 = _lerp(c00, c10, ty)
    c1 = _lerp(c01, c11, ty)
    out = _lerp(c0, c1, tz)
    return np.where(inside, out, 0.0)


def interpolate_nearest(data: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Nearest-neighbour lookup with half-up rounding; out-of-bounds gives 0."""
    data = np.asarray(data)
    coords = np.asarray(coords, dtype=np.float64)
    idx = np.floor(coords + 0.5)
    shape = np.array(data.shape, dtype=np.float64).reshape((3,) + (1,) * (idx.ndim - 1))
    inside = np.all((idx >= 0) & (idx <= shape - 1), axis=0)
    ii = np.where(inside, idx, 0).astype(np.intp)
    values = data[ii[0], ii[1], ii[2]]
    return np.where(inside, values, np.zeros((), dtype=data.dtype))


def sample_trilinear(vol: Volume3D, p: Sequence[float]) -> float:
    """Trilinearly interpolate ``vol`` at voxel coordinate ``p`` (0 outside the grid)."""
    p = _check_point(p)
    return float(interpolate_trilinear(volume_array(vol), p.reshape(3, 1))[0])


def sample_nearest(vol: LabelVolume, p: Sequence[float]) -> int:
    """Label of the voxel nearest to ``p``; ties round half up, out-of-bounds gives 0."""
    p = _check_point(p)
    return int(interpolate_nearest(volume_array(vol), p.reshape(3, 1))[0])


def region_mask(seg, region: str) -> np.ndarray:
    """Boolean mask of a nested tumor region.

    ET is label 4, TC is labels {1, 4} and WT is labels {1, 2, 4}, so
    ``ET <= TC <= WT`` holds voxel-wise for every segmentation.
    """
    try:
        labels = _REGION_LABELS[region]
    except KeyError:
        raise ValueError(f"unknown region {region!r}, expected one of {REGIONS}") from None
    return np.isin(volume_array(seg), labels)


def compose_labels(et: np.ndarray, tc: np.ndarray, wt: np.ndarray) -> np.ndarray:
    """Rebuild a label array from region masks, ET taking precedence over TC over WT."""
    out = np.zeros(np.shape(wt), dtype=np.uint8)
    out[wt] = EDEMA
    out[tc] = NECROSIS
    out[et] = ENHANCING
    return out
