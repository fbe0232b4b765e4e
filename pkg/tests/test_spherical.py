import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from spherebrats import nifti
from spherebrats.spherical import (
    SphericalGrid,
    SphericalVolume,
    cascade_refine,
    default_grid,
    load_spherical,
    save_spherical,
    select_origin,
    to_cartesian,
    to_spherical,
)
from spherebrats.synthetic import ball, tumor_phantom
from spherebrats.volume import LabelVolume, Volume3D

import oracles

# Scalar reference resampler, radius-40 ball in 128^3 at the default grid.
PINNED_BALL_DICE = 0.9972393416202826


def dice(a, b):
    a, b = np.asarray(a) > 0, np.asarray(b) > 0
    return 2 * np.sum(a & b) / (a.sum() + b.sum())


def test_default_grid_center_of_128_cube():
    g = default_grid((128,) * 3, (1, 1, 1), (63.5,) * 3)
    assert g.shape == (128, 128, 256)
    assert g.rho_max == pytest.approx(63.5 * math.sqrt(3), rel=1e-15)
    assert g.rho_max == pytest.approx(109.99, abs=5e-3)


def test_default_grid_brats_shape():
    g = default_grid((240, 240, 155), (1, 1, 1), (119.5, 119.5, 77))
    assert g.shape == (240, 240, 480)


def test_default_grid_rounds_phi_to_multiple_of_four():
    assert default_grid((5, 3, 3), (1, 1, 1), (2, 1, 1)).n_phi == 12
    assert default_grid((7, 3, 3), (1, 1, 1), (2, 1, 1)).n_phi == 16


@pytest.mark.parametrize("origin", [(-1, 0, 0), (0, 0, 8), (math.nan, 1, 1)])
def test_default_grid_rejects_outside_origin(origin):
    with pytest.raises(ValueError):
        default_grid((8, 8, 8), (1, 1, 1), origin)


def test_grid_validation():
    with pytest.raises(ValueError):
        SphericalGrid((0, 0, 0), 1, 4, 4, 1.0)
    with pytest.raises(ValueError):
        SphericalGrid((0, 0, 0), 4, 4, 4, 0.0)


def test_constant_volume_forward_and_back():
    vol = Volume3D(np.full((19, 20, 21), 5.0))
    grid = default_grid(vol.dims, vol.spacing, (9.2, 9.9, 10.3))
    s = to_spherical(vol, grid)
    rho = grid.rho_values()
    pts = _sample_points(grid, vol.spacing)
    inside = np.all((pts >= 0) & (pts <= np.array(vol.dims)[:, None, None, None] - 1), axis=0)
    assert np.all(s.data[inside] == 5.0)
    assert np.all(s.data[~inside] == 0.0)
    assert rho[0] == 0
    # Out-of-volume samples are 0, so voxels near the faces blend with them.
    # Exactness holds wherever the whole stencil lies inside the inscribed ball.
    idx = np.indices(vol.dims).astype(float)
    r = np.sqrt(sum(((idx[t] - grid.origin[t]) * vol.spacing[t]) ** 2 for t in range(3)))
    inscribed = min(min(o, n - 1 - o) * s_ for o, n, s_ in zip(grid.origin, vol.dims, vol.spacing))
    core = r <= inscribed - rho[1]
    assert core.sum() > 20
    for mode in ("trilinear", "nearest"):
        back = to_cartesian(s, mode=mode).data
        assert np.all(back[core] == 5.0)
        assert back.min() >= 0.0 and back.max() <= 5.0


def _sample_points(grid, spacing):
    rho, th, ph = grid.rho_values(), grid.theta_values(), grid.phi_values()
    R, T, P = np.meshgrid(rho, th, ph, indexing="ij")
    u = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)])
    return np.asarray(grid.origin)[:, None, None, None] + R * u / np.asarray(spacing)[:, None, None, None]


def test_rho_zero_row_holds_origin_value():
    rng = np.random.default_rng(1)
    vol = Volume3D(rng.standard_normal((6, 7, 8)))
    origin = (2.3, 3.6, 4.1)
    s = to_spherical(vol, default_grid(vol.dims, vol.spacing, origin))
    np.testing.assert_allclose(s.data[0], oracles.trilinear_scalar(vol.data, origin), rtol=0, atol=1e-14)
    assert np.all(s.data[0] == s.data[0, 0, 0])


def test_ball_interior_and_exterior():
    dims, c = (48,) * 3, (23.5,) * 3
    seg = LabelVolume(ball(dims, c, 20.0).astype(np.uint8))
    grid = default_grid(dims, seg.spacing, c)
    s = to_spherical(seg, grid).data
    rho = grid.rho_values()
    # nearest voxel is within sqrt(3)/2 voxel of each sample
    assert np.all(s[rho < 19.0] == 1)
    assert np.all(s[rho > 21.0] == 0)


@pytest.mark.parametrize("origin", [(3.3, 4.7, 2.2), (4.1, 3.9, 3.05), (2.5, 5.5, 3.5)])
def test_forward_matches_scalar_oracle(origin):
    rng = np.random.default_rng(7)
    dims, spacing = (9, 11, 7), (1.0, 0.8, 1.3)
    labels = rng.choice([0, 1, 2, 4], size=dims).astype(np.uint8)
    grid = default_grid(dims, spacing, origin)
    got = to_spherical(LabelVolume(labels, spacing), grid).data
    ref = oracles.spherical_forward_scalar(labels, spacing, origin, *grid.shape, grid.rho_max)
    assert np.array_equal(got, ref)

    scal = rng.standard_normal(dims)
    got_t = to_spherical(Volume3D(scal, spacing), grid).data
    ref_t = oracles.spherical_forward_scalar(scal, spacing, origin, *grid.shape, grid.rho_max,
                                             sampler=oracles.trilinear_scalar)
    np.testing.assert_allclose(got_t, ref_t, rtol=0, atol=1e-12)


@pytest.mark.parametrize("origin", [(3.3, 4.7, 2.2), (2.5, 5.5, 3.5)])
def test_inverse_matches_scalar_oracle(origin):
    rng = np.random.default_rng(8)
    dims, spacing = (9, 11, 7), (1.0, 0.8, 1.3)
    grid = default_grid(dims, spacing, origin)
    sdata = rng.choice([0, 1, 2, 4], size=grid.shape).astype(np.uint8)
    svol = SphericalVolume(grid, sdata, dims, spacing, is_labels=True)
    got = to_cartesian(svol).labels
    ref = oracles.spherical_inverse_scalar(sdata, origin, grid.rho_max, dims, spacing)
    assert np.array_equal(got, ref)


@pytest.mark.parametrize("n,origin", [(17, 8.0), (21, 10.0), (33, 16.0)])
def test_quarter_turn_is_phi_shift(n, origin):
    rng = np.random.default_rng(n)
    labels = rng.choice([0, 1, 2, 4], size=(n, n, n - 4)).astype(np.uint8)
    o = (origin, origin, 5.0)
    grid = default_grid(labels.shape, (1, 1, 1), o)
    assert grid.n_phi % 4 == 0
    base = to_spherical(LabelVolume(labels), grid).data
    turned = to_spherical(LabelVolume(np.rot90(labels, 1, axes=(0, 1)).copy()), grid).data
    assert np.array_equal(turned, np.roll(base, grid.n_phi // 4, axis=2))


def test_single_voxel_at_origin_survives_round_trip():
    labels = np.zeros((9, 9, 9), dtype=np.uint8)
    labels[4, 4, 4] = 4
    seg = LabelVolume(labels)
    back = to_cartesian(to_spherical(seg, default_grid(seg.dims, seg.spacing, (4, 4, 4))))
    assert back.labels[4, 4, 4] == 4


def test_ball_round_trip_dice_pinned():
    dims, c = (128,) * 3, (63.5,) * 3
    seg = LabelVolume(ball(dims, c, 40.0).astype(np.uint8))
    s = to_spherical(seg, default_grid(dims, seg.spacing, c))
    assert dice(seg.labels, to_cartesian(s).labels) == PINNED_BALL_DICE


def test_round_trip_dice_non_decreasing_in_resolution():
    dims, c = (128,) * 3, (63.5,) * 3
    seg = LabelVolume(ball(dims, c, 40.0).astype(np.uint8))
    base = default_grid(dims, seg.spacing, c)
    scores = []
    for f in (0.5, 1.0, 2.0):
        g = SphericalGrid(c, int(base.n_rho * f), int(base.n_theta * f), int(base.n_phi * f), base.rho_max)
        scores.append(dice(seg.labels, to_cartesian(to_spherical(seg, g)).labels))
    assert scores == sorted(scores)


def test_trilinear_rejected_for_labels():
    seg = LabelVolume(np.zeros((3, 3, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        to_spherical(seg, default_grid(seg.dims, seg.spacing, (1, 1, 1)), mode="trilinear")


def test_select_origin_cube_and_empty():
    m = np.zeros((30, 30, 30), dtype=bool)
    m[10:15, 10:15, 10:15] = True
    assert select_origin(m) == (12.0, 12.0, 12.0)
    assert select_origin(np.zeros((240, 240, 155), dtype=bool)) == (119.5, 119.5, 77.0)


def test_select_origin_hollow_shell():
    dims, c = (21, 21, 21), (10.0, 10.0, 10.0)
    shell = ball(dims, c, 8.0) & ~ball(dims, c, 6.0)
    o = select_origin(shell)
    assert shell[tuple(int(v) for v in o)]
    pts = np.argwhere(shell)
    centroid = pts.mean(axis=0)
    best = min(np.sum((pts - centroid) ** 2, axis=1))
    assert np.sum((np.array(o) - centroid) ** 2) == best


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(bool, (7, 6, 5)), st.tuples(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.2, 3.0)))
def test_select_origin_is_inside_mask(mask, spacing):
    o = select_origin(mask, spacing)
    if mask.any():
        assert mask[tuple(int(math.floor(v + 0.5)) for v in o)]


@settings(max_examples=25, deadline=None)
@given(
    hnp.arrays(bool, (8, 7, 6)),
    hnp.arrays(bool, (8, 7, 6)),
    st.tuples(st.floats(0, 7), st.floats(0, 6), st.floats(0, 5)),
)
def test_monotone_containment(a, extra, origin):
    b = a | extra
    grid = default_grid(a.shape, (1, 1, 1), origin)
    fa = to_spherical(LabelVolume(a.astype(np.uint8)), grid)
    fb = to_spherical(LabelVolume(b.astype(np.uint8)), grid)
    assert np.all(fa.data <= fb.data)
    assert np.all(to_cartesian(fa).labels <= to_cartesian(fb).labels)


@settings(max_examples=25, deadline=None)
@given(
    hnp.arrays(np.float64, (6, 5, 7), elements=st.floats(-50, 50)),
    st.tuples(st.floats(0, 5), st.floats(0, 4), st.floats(0, 6)),
)
def test_trilinear_forward_stays_in_input_range(data, origin):
    s = to_spherical(Volume3D(data), default_grid(data.shape, (1, 1, 1), origin)).data
    # out-of-volume samples are 0, so widen the range to include it
    lo, hi = min(data.min(), 0.0), max(data.max(), 0.0)
    assert s.min() >= lo and s.max() <= hi
    assert s[0].min() >= data.min() and s[0].max() <= data.max()


def test_cascade_refine():
    seg = tumor_phantom((40, 40, 40), radii=(14, 9, 5))
    o = select_origin(seg.labels > 0)
    s = to_spherical(seg, default_grid(seg.dims, seg.spacing, o))
    out = cascade_refine(seg, s)
    for region in ((1, 2, 4), (1, 4), (4,)):
        assert dice(np.isin(out.labels, region), np.isin(seg.labels, region)) >= 0.98

    zero = SphericalVolume(s.grid, np.zeros_like(s.data), s.source_dims, s.source_spacing, True)
    assert not cascade_refine(seg, zero).labels.any()

    two = SphericalVolume(s.grid, np.full_like(s.data, 2), s.source_dims, s.source_spacing, True)
    assert np.all(cascade_refine(seg, two).labels == 2)

    with pytest.raises(ValueError):
        cascade_refine(seg, s, target_dims=(40, 40, 39))


def test_sidecar_round_trip(tmp_path):
    seg = tumor_phantom((20, 22, 18), radii=(7, 5, 3), spacing=(1.0, 0.9, 1.2))
    s = to_spherical(seg, default_grid(seg.dims, seg.spacing, (9.5, 10.0, 8.25)))
    save_spherical(s, tmp_path / "s.nii.gz", tmp_path / "s.json")
    meta = json.loads((tmp_path / "s.json").read_text())
    assert set(meta) == {"origin", "rho_max", "source_dims", "source_spacing"}
    assert nifti.load(tmp_path / "s.nii.gz").dims == s.grid.shape
    back = load_spherical(tmp_path / "s.nii.gz", tmp_path / "s.json")
    assert back.grid == s.grid and back.is_labels
    assert back.source_dims == seg.dims and back.source_spacing == seg.spacing
    assert np.array_equal(to_cartesian(back).labels, to_cartesian(s).labels)

    vol = Volume3D(np.random.default_rng(0).standard_normal((6, 6, 6)))
    sv = to_spherical(vol, default_grid(vol.dims, vol.spacing, (2.5, 2.5, 2.5)))
    save_spherical(sv, tmp_path / "v.nii", tmp_path / "v.json")
    assert np.array_equal(load_spherical(tmp_path / "v.nii", tmp_path / "v.json").data, sv.data)
