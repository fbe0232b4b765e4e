import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from spherebrats.volume import (
    LabelVolume,
    Volume3D,
    interpolate_trilinear,
    region_mask,
    sample_nearest,
    sample_trilinear,
)

import oracles


def test_trilinear_constant_volume():
    vol = Volume3D(np.full((4, 5, 3), 7.0))
    assert sample_trilinear(vol, (1.5, 2.3, 0.7)) == 7.0


def test_trilinear_on_voxel_returns_value():
    data = np.arange(4 * 5 * 3, dtype=float).reshape(4, 5, 3) * 1.37
    assert sample_trilinear(Volume3D(data), (2, 3, 1)) == data[2, 3, 1]


def test_trilinear_hand_value():
    vol = Volume3D(np.array([0.0, 10.0]).reshape(2, 1, 1))
    # 0 + 0.25 * (10 - 0)
    assert sample_trilinear(vol, (0.25, 0, 0)) == pytest.approx(2.5, abs=1e-15)


@pytest.mark.parametrize("p", [(-0.01, 0, 0), (0, 4.5, 0), (0, 0, 3.0), (9, 9, 9)])
def test_trilinear_out_of_bounds_is_zero(p):
    vol = Volume3D(np.ones((4, 5, 3)))
    assert sample_trilinear(vol, p) == 0.0


@pytest.mark.parametrize("p", [(np.nan, 0, 0), (0, np.inf, 0)])
def test_samplers_reject_non_finite(p):
    with pytest.raises(ValueError):
        sample_trilinear(Volume3D(np.ones((2, 2, 2))), p)
    with pytest.raises(ValueError):
        sample_nearest(LabelVolume(np.ones((2, 2, 2), dtype=np.uint8)), p)


def test_nearest_rounding_and_bounds():
    labels = np.zeros((3, 3, 3), dtype=np.uint8)
    labels[1, 2, 2] = 4
    seg = LabelVolume(labels)
    assert sample_nearest(seg, (1.4, 1.6, 2.0)) == 4
    assert sample_nearest(seg, (-3, 0, 0)) == 0


def test_nearest_tie_rounds_up():
    labels = np.zeros((2, 1, 1), dtype=np.uint8)
    labels[0, 0, 0], labels[1, 0, 0] = 1, 2
    assert sample_nearest(LabelVolume(labels), (0.5, 0, 0)) == 2
    assert sample_nearest(LabelVolume(labels), (0.49, 0, 0)) == 1


def test_region_masks():
    labels = np.array([0, 1, 2, 4], dtype=np.uint8).reshape(4, 1, 1)
    seg = LabelVolume(labels)
    assert region_mask(seg, "ET").ravel().tolist() == [False, False, False, True]
    assert region_mask(seg, "TC").ravel().tolist() == [False, True, False, True]
    assert region_mask(seg, "WT").ravel().tolist() == [False, True, True, True]
    empty = LabelVolume(np.zeros((2, 2, 2), dtype=np.uint8))
    assert not any(region_mask(empty, r).any() for r in ("ET", "TC", "WT"))
    with pytest.raises(ValueError):
        region_mask(seg, "XX")


def test_label_volume_rejects_bad_labels():
    with pytest.raises(ValueError):
        LabelVolume(np.full((2, 2, 2), 3, dtype=np.uint8))
    with pytest.raises(ValueError):
        LabelVolume(np.zeros((2, 2, 2)), spacing=(1, 0, 1))


def test_volume_rejects_non_finite():
    data = np.zeros((2, 2, 2))
    data[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        Volume3D(data)


labels_strategy = hnp.arrays(np.uint8, st.tuples(*[st.integers(1, 5)] * 3), elements=st.sampled_from([0, 1, 2, 4]))


@given(labels_strategy)
def test_regions_nest(labels):
    seg = LabelVolume(labels)
    et, tc, wt = (region_mask(seg, r) for r in ("ET", "TC", "WT"))
    assert np.all(et <= tc) and np.all(tc <= wt)


@settings(max_examples=60)
@given(
    hnp.arrays(np.float64, (3, 4, 2), elements=st.floats(-100, 100)),
    st.tuples(st.floats(-0.5, 2.5), st.floats(-0.5, 3.5), st.floats(-0.5, 1.5)),
)
def test_trilinear_matches_oracle_and_is_convex(data, p):
    got = interpolate_trilinear(data, np.array(p).reshape(3, 1))[0]
    assert got == pytest.approx(oracles.trilinear_scalar(data, p), abs=1e-9)
    x, y, z = p
    if 0 <= x <= 2 and 0 <= y <= 3 and 0 <= z <= 1:
        x0, y0, z0 = (int(np.floor(c)) for c in p)
        nb = data[x0:x0 + 2, y0:y0 + 2, z0:z0 + 2]
        assert nb.min() <= got <= nb.max()


@given(labels_strategy, st.tuples(*[st.floats(-3, 8)] * 3))
def test_nearest_value_present_or_zero(labels, p):
    v = sample_nearest(LabelVolume(labels), p)
    assert v == 0 or v in labels
    assert v == oracles.nearest_scalar(labels, p)
