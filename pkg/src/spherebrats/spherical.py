"""Resampling between Cartesian voxel grids and (rho, theta, phi) grids.

A spherical grid is centred on an origin given in continuous voxel
coordinates. Sample ``(a, b, c)`` sits at

    rho   = a * rho_max / (n_rho - 1)          a in [0, n_rho)
    theta = b * pi / (n_theta - 1)             theta in [0, pi]
    phi   = -pi + c * 2 pi / n_phi             phi in [-pi, pi)

and maps to the Cartesian point ``origin + rho * u(theta, phi) / spacing``
with ``u = (sin t cos p, sin t sin p, cos t)``. Distances are in mm, so
anisotropic spacing is handled. Trig values below 1e-12 in magnitude are
taken as exactly 0.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .volume import (
    LabelVolume,
    Volume3D,
    check_same_grid,
    interpolate_nearest,
    interpolate_trilinear,
    region_mask,
    volume_array,
)

MODES = ("trilinear", "nearest")

# rows per chunk when resampling, bounds peak memory on 240x240x155 inputs
_CHUNK = 1 << 20


@dataclass(frozen=True)
class SphericalGrid:
    origin: tuple[float, float, float]
    n_rho: int
    n_theta: int
    n_phi: int
    rho_max: float

    def __post_init__(self):
        origin = tuple(float(v) for v in self.origin)
        if len(origin) != 3 or not all(math.isfinite(v) for v in origin):
            raise ValueError(f"origin must be 3 finite coordinates, got {self.origin}")
        object.__setattr__(self, "origin", origin)
        for name in ("n_rho", "n_theta", "n_phi"):
            n = getattr(self, name)
            if int(n) != n or n < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {n}")
            object.__setattr__(self, name, int(n))
        if not (math.isfinite(self.rho_max) and self.rho_max > 0):
            raise ValueError(f"rho_max must be finite and > 0, got {self.rho_max}")
        object.__setattr__(self, "rho_max", float(self.rho_max))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_rho, self.n_theta, self.n_phi)

    def rho_values(self) -> np.ndarray:
        return np.arange(self.n_rho) * (self.rho_max / (self.n_rho - 1))

    def theta_values(self) -> np.ndarray:
        return np.arange(self.n_theta) * (math.pi / (self.n_theta - 1))

    def phi_values(self) -> np.ndarray:
        return -math.pi + np.arange(self.n_phi) * (2 * math.pi / self.n_phi)


@dataclass(frozen=True, eq=False)
class SphericalVolume:
    """Samples on a :class:`SphericalGrid`, stored as ``data[a, b, c]``.

    ``source_dims`` and ``source_spacing`` describe the Cartesian volume the
    samples came from, so the inverse transform needs nothing else.
    """

    grid: SphericalGrid
    data: np.ndarray
    source_dims: tuple[int, int, int]
    source_spacing: tuple[float, float, float]
    is_labels: bool = False

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.shape != self.grid.shape:
            raise ValueError(f"data shape {data.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "source_dims", tuple(int(n) for n in self.source_dims))
        object.__setattr__(self, "source_spacing", tuple(float(s) for s in self.source_spacing))
        object.__setattr__(self, "data", data)


def default_grid(dims, spacing, origin) -> SphericalGrid:
    """Grid covering the whole volume from ``origin``.

    ``rho_max`` reaches the farthest corner; ``n_rho = n_theta = max(dims)``
    and ``n_phi = 2 * max(dims)`` rounded up to a multiple of 4, so a quarter
    turn about z is an exact shift along phi.
    """
    dims = tuple(int(n) for n in dims)
    spacing = np.asarray(spacing, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)
    if not np.all(np.isfinite(origin)) or np.any(origin < 0) or np.any(origin > np.array(dims) - 1):
        raise ValueError(f"origin {tuple(origin)} lies outside volume of dims {dims}")
    corners = np.array(list(itertools.product(*((0, n - 1) for n in dims))))
    rho_max = float(np.max(np.linalg.norm((corners - origin) * spacing, axis=1)))
    if rho_max == 0:
        # single-voxel volume, any positive radius will do
        rho_max = float(np.min(spacing))
    n = max(max(dims), 2)
    n_phi = -(-2 * n // 4) * 4
    return SphericalGrid(tuple(origin), n, n, n_phi, rho_max)


def _snap(v: np.ndarray) -> np.ndarray:
    # sin(pi), cos(pi/2) etc. come out as ~1e-16; make them exact zeros so
    # axis-aligned samples land exactly on the origin's coordinate
    return np.where(np.abs(v) < 1e-12, 0.0, v)


def _phi_directions(n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    """cos/sin of the phi samples, built so a quarter-turn shift is exact."""
    phi = -math.pi + np.arange(n_phi) * (2 * math.pi / n_phi)
    cos, sin = _snap(np.cos(phi)), _snap(np.sin(phi))
    if n_phi % 4 == 0:
        q = n_phi // 4
        c0, s0 = cos[:q].copy(), sin[:q].copy()
        for k in range(1, 4):
            # rotate the first quarter by k * 90 degrees
            c0, s0 = -s0, c0
            cos[k * q:(k + 1) * q] = c0
            sin[k * q:(k + 1) * q] = s0
    return cos, sin


def _resolve_mode(vol, mode: str | None) -> str:
    is_labels = isinstance(vol, LabelVolume) or getattr(vol, "is_labels", False)
    if mode is None:
        return "nearest" if is_labels else "trilinear"
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if is_labels and mode == "trilinear":
        raise ValueError("label volumes can only be resampled with nearest mode")
    return mode


def to_spherical(vol, grid: SphericalGrid, mode: str | None = None) -> SphericalVolume:
    """Resample a Cartesian volume onto ``grid``.

    ``mode`` defaults to nearest for label volumes and trilinear otherwise.
    Samples falling outside the volume are 0.
    """
    mode = _resolve_mode(vol, mode)
    data = volume_array(vol)
    spacing = np.asarray(vol.spacing, dtype=np.float64)
    origin = np.asarray(grid.origin)

    rho = grid.rho_values()
    theta = grid.theta_values()
    sin_t, cos_t = _snap(np.sin(theta)), _snap(np.cos(theta))
    cos_p, sin_p = _phi_directions(grid.n_phi)
    # unit direction per (theta, phi), shape (3, n_theta, n_phi)
    u = np.stack([
        np.outer(sin_t, cos_p),
        np.outer(sin_t, sin_p),
        np.broadcast_to(cos_t[:, None], (grid.n_theta, grid.n_phi)),
    ])
    sp = spacing[:, None, None, None]

    out_dtype = np.uint8 if mode == "nearest" and isinstance(vol, LabelVolume) else np.float64
    out = np.empty(grid.shape, dtype=out_dtype)
    sampler = interpolate_nearest if mode == "nearest" else interpolate_trilinear
    step = max(1, _CHUNK // (grid.n_theta * grid.n_phi))
    for start in range(0, grid.n_rho, step):
        r = rho[start:start + step]
        coords = origin[:, None, None, None] + (r[None, :, None, None] * u[:, None, :, :]) / sp
        out[start:start + step] = sampler(data, coords)
    # rho = 0 has no direction; every angle holds the origin's value
    out[0] = sampler(data, origin.reshape(3, 1))[0]
    return SphericalVolume(grid, out, vol.dims, vol.spacing, is_labels=isinstance(vol, LabelVolume))


def _spherical_indices(grid: SphericalGrid, coords_mm: np.ndarray):
    """Fractional (a, b, c) indices for mm offsets from the origin."""
    dx, dy, dz = coords_mm
    rho = np.sqrt(dx * dx + dy * dy + dz * dz)
    safe = np.where(rho > 0, rho, 1.0)
    theta = np.where(rho > 0, np.arccos(np.clip(dz / safe, -1.0, 1.0)), 0.0)
    phi = np.where(rho > 0, np.arctan2(dy, dx), -math.pi)
    a = rho * ((grid.n_rho - 1) / grid.rho_max)
    b = theta * ((grid.n_theta - 1) / math.pi)
    c = (phi + math.pi) * (grid.n_phi / (2 * math.pi))
    return rho, a, b, c


def _sample_spherical_nearest(data, grid, a, b, c):
    ia = np.floor(a + 0.5).astype(np.intp)
    ib = np.clip(np.floor(b + 0.5).astype(np.intp), 0, grid.n_theta - 1)
    ic = np.floor(c + 0.5).astype(np.intp) % grid.n_phi
    inside = ia <= grid.n_rho - 1
    ia = np.where(inside, ia, 0)
    return np.where(inside, data[ia, ib, ic], np.zeros((), dtype=data.dtype))


def _sample_spherical_trilinear(data, grid, a, b, c):
    data = data.astype(np.float64, copy=False)
    inside = a <= grid.n_rho - 1
    a = np.where(inside, a, 0.0)
    b = np.clip(b, 0.0, grid.n_theta - 1)
    c = np.mod(c, grid.n_phi)
    a0 = np.floor(a).astype(np.intp)
    b0 = np.floor(b).astype(np.intp)
    c0 = np.floor(c).astype(np.intp) % grid.n_phi
    a1 = np.minimum(a0 + 1, grid.n_rho - 1)
    b1 = np.minimum(b0 + 1, grid.n_theta - 1)
    c1 = (c0 + 1) % grid.n_phi
    ta, tb, tc = a - a0, b - b0, c - np.floor(c)

    def lerp(x, y, t):
        v = x + t * (y - x)
        return np.clip(v, np.minimum(x, y), np.maximum(x, y))

    v00 = lerp(data[a0, b0, c0], data[a1, b0, c0], ta)
    v10 = lerp(data[a0, b1, c0], data[a1, b1, c0], ta)
    v01 = lerp(data[a0, b0, c1], data[a1, b0, c1], ta)
    v11 = lerp(data[a0, b1, c1], data[a1, b1, c1], ta)
    v = lerp(lerp(v00, v10, tb), lerp(v01, v11, tb), tc)
    return np.where(inside, v, 0.0)


def to_cartesian(svol: SphericalVolume, target_dims=None, spacing=None, mode: str | None = None):
    """Resample a spherical volume back onto a Cartesian grid.

    Target dims and spacing default to the source volume recorded in
    ``svol``. Phi wraps periodically; voxels beyond ``rho_max`` are 0.
    Returns a :class:`LabelVolume` for nearest-mode label data, otherwise a
    :class:`Volume3D`.
    """
    mode = _resolve_mode(svol, mode)
    dims = tuple(int(n) for n in (target_dims if target_dims is not None else svol.source_dims))
    spacing = tuple(float(s) for s in (spacing if spacing is not None else svol.source_spacing))
    grid = svol.grid
    sp = np.asarray(spacing)
    origin = np.asarray(grid.origin)

    out = np.empty(dims, dtype=np.uint8 if svol.is_labels else np.float64)
    sampler = _sample_spherical_nearest if mode == "nearest" else _sample_spherical_trilinear
    ys = (np.arange(dims[1]) - origin[1]) * sp[1]
    zs = (np.arange(dims[2]) - origin[2]) * sp[2]
    step = max(1, _CHUNK // (dims[1] * dims[2]))
    for start in range(0, dims[0], step):
        xs = (np.arange(start, min(start + step, dims[0])) - origin[0]) * sp[0]
        coords = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"))
        _, a, b, c = _spherical_indices(grid, coords)
        out[start:start + len(xs)] = sampler(svol.data, grid, a, b, c)
    if svol.is_labels:
        return LabelVolume(out, spacing)
    return Volume3D(out, spacing)


def select_origin(coarse_wt, spacing=(1.0, 1.0, 1.0)) -> tuple[float, float, float]:
    """Pick a transform origin that lies inside the coarse tumor mask.

    Returns the mask centroid when its nearest voxel belongs to the mask,
    otherwise the mask voxel closest (in mm) to the centroid, ties going to
    the lexicographically smallest index. An empty mask gives the volume
    centre.
    """
    mask = np.asarray(volume_array(coarse_wt), dtype=bool)
    if not mask.any():
        return tuple(float((n - 1) / 2) for n in mask.shape)
    idx = np.argwhere(mask)
    centroid = idx.mean(axis=0)
    nearest = np.floor(centroid + 0.5).astype(int)
    if mask[tuple(nearest)]:
        return tuple(float(v) for v in centroid)
    d2 = np.sum(((idx - centroid) * np.asarray(spacing, dtype=np.float64)) ** 2, axis=1)
    return tuple(float(v) for v in idx[int(np.argmin(d2))])


def cascade_refine(cartesian_seg: LabelVolume, spherical_pred: SphericalVolume,
                   target_dims=None, spacing=None) -> LabelVolume:
    """Map a spherical-space label prediction back onto the Cartesian grid of ``cartesian_seg``."""
    dims = tuple(target_dims) if target_dims is not None else cartesian_seg.dims
    spacing = tuple(spacing) if spacing is not None else cartesian_seg.spacing
    if tuple(cartesian_seg.dims) != tuple(int(n) for n in dims):
        raise ValueError(f"target dims {dims} differ from segmentation dims {cartesian_seg.dims}")
    if not spherical_pred.is_labels:
        raise ValueError("spherical prediction must hold labels")
    out = to_cartesian(spherical_pred, dims, spacing, mode="nearest")
    check_same_grid(out, cartesian_seg, "refined and Cartesian segmentations")
    return out


def origin_from_mask(seg) -> tuple[float, float, float]:
    """``select_origin`` on the WT region of a segmentation."""
    return select_origin(region_mask(seg, "WT"), getattr(seg, "spacing", (1.0, 1.0, 1.0)))


def sidecar(svol: SphericalVolume) -> dict:
    return {
        "origin": list(svol.grid.origin),
        "rho_max": svol.grid.rho_max,
        "source_dims": list(svol.source_dims),
        "source_spacing": list(svol.source_spacing),
    }


def save_spherical(svol: SphericalVolume, image_path, meta_path) -> None:
    """Persist as a NIfTI of shape (n_rho, n_theta, n_phi) plus a JSON sidecar."""
    from . import nifti

    if svol.is_labels:
        vol = LabelVolume(svol.data, (1.0, 1.0, 1.0))
        nifti.save(vol, image_path)
    else:
        nifti.save(Volume3D(svol.data, (1.0, 1.0, 1.0)), image_path, nifti.DT_FLOAT64)
    Path(meta_path).write_text(json.dumps(sidecar(svol), indent=2) + "\n")


def load_spherical(image_path, meta_path) -> SphericalVolume:
    from . import nifti

    meta = json.loads(Path(meta_path).read_text())
    try:
        origin, rho_max = meta["origin"], meta["rho_max"]
        source_dims, source_spacing = meta["source_dims"], meta["source_spacing"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"sidecar {meta_path} is missing field {exc}") from exc
    vol = nifti.load(image_path)
    data = volume_array(vol)
    grid = SphericalGrid(tuple(origin), *data.shape, rho_max=rho_max)
    return SphericalVolume(grid, data, source_dims, source_spacing, is_labels=isinstance(vol, LabelVolume))
