"""Overlap and surface-distance metrics for ET, WT and TC.

Conventions for degenerate inputs:

* Dice of two empty masks is 1.0; sensitivity/specificity with an empty
  denominator are 1.0.
* HD95 of two empty masks is 0; when exactly one mask is empty it is the
  volume diagonal in mm.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .volume import check_same_grid, region_mask, volume_array

METRIC_NAMES = ("dice", "sensitivity", "specificity", "hd95")
CASE_REGIONS = ("ET", "WT", "TC")
SUMMARY_STATS = ("mean", "std_dev", "median", "quantile_25", "quantile_75")

_FACE = ndimage.generate_binary_structure(3, 1)


def confusion_counts(pred, truth) -> tuple[int, int, int, int]:
    """Voxel counts ``(TP, FP, FN, TN)`` of two binary masks."""
    check_same_grid(pred, truth, "prediction and truth masks")
    p = np.asarray(volume_array(pred), dtype=bool)
    t = np.asarray(volume_array(truth), dtype=bool)
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    return tp, fp, fn, p.size - tp - fp - fn


def _ratio(num: int, den: int) -> float:
    return 1.0 if den == 0 else num / den


def dice(pred, truth) -> float:
    tp, fp, fn, _ = confusion_counts(pred, truth)
    return _ratio(2 * tp, 2 * tp + fp + fn)


def sensitivity(pred, truth) -> float:
    tp, _, fn, _ = confusion_counts(pred, truth)
    return _ratio(tp, tp + fn)


def specificity(pred, truth) -> float:
    _, fp, _, tn = confusion_counts(pred, truth)
    return _ratio(tn, tn + fp)


def surface(mask) -> np.ndarray:
    """Mask voxels with a face neighbour outside the mask or on the volume boundary."""
    mask = np.asarray(mask, dtype=bool)
    return mask & ~ndimage.binary_erosion(mask, _FACE, border_value=0)


def _directed_distances(src: np.ndarray, dst: np.ndarray, spacing) -> np.ndarray:
    # exact Euclidean distance (mm) from every voxel to the nearest dst voxel
    dist = ndimage.distance_transform_edt(~dst, sampling=spacing)
    return dist[src]


def hd95(pred, truth, spacing=None) -> float:
    """Symmetric 95th-percentile surface distance in mm.

    Percentiles use linear interpolation between order statistics.
    """
    check_same_grid(pred, truth, "prediction and truth masks")
    if spacing is None:
        spacing = getattr(truth, "spacing", None) or getattr(pred, "spacing", None) or (1.0, 1.0, 1.0)
    spacing = tuple(float(s) for s in spacing)
    p = np.asarray(volume_array(pred), dtype=bool)
    t = np.asarray(volume_array(truth), dtype=bool)
    p_any, t_any = p.any(), t.any()
    if not p_any and not t_any:
        return 0.0
    if not (p_any and t_any):
        return math.sqrt(sum((n * s) ** 2 for n, s in zip(p.shape, spacing)))
    sp, st = surface(p), surface(t)
    d_pt = _directed_distances(sp, st, spacing)
    d_tp = _directed_distances(st, sp, spacing)
    return float(max(np.percentile(d_pt, 95), np.percentile(d_tp, 95)))


@dataclass
class CaseMetrics:
    """Per-region metric values; ``values[region][metric]``."""

    values: dict
    case_id: str = ""

    def __getitem__(self, region: str) -> dict:
        return self.values[region]

    def to_dict(self) -> dict:
        out = {"id": self.case_id}
        for region in CASE_REGIONS:
            out[region] = {m: self.values[region][m] for m in METRIC_NAMES}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "CaseMetrics":
        try:
            values = {r: {m: float(d[r][m]) for m in METRIC_NAMES} for r in CASE_REGIONS}
        except (KeyError, TypeError) as exc:
            raise ValueError(f"case record missing field {exc}") from exc
        return cls(values, str(d.get("id", "")))


def evaluate_case(pred, truth, case_id: str = "") -> CaseMetrics:
    """Dice, sensitivity, specificity and HD95 for ET, WT and TC."""
    check_same_grid(pred, truth, "prediction and truth")
    spacing = getattr(truth, "spacing", (1.0, 1.0, 1.0))
    values = {}
    for region in CASE_REGIONS:
        p, t = region_mask(pred, region), region_mask(truth, region)
        tp, fp, fn, tn = confusion_counts(p, t)
        values[region] = {
            "dice": _ratio(2 * tp, 2 * tp + fp + fn),
            "sensitivity": _ratio(tp, tp + fn),
            "specificity": _ratio(tn, tn + fp),
            "hd95": hd95(p, t, spacing),
        }
    return CaseMetrics(values, case_id)


def summarize_cohort(cases: Sequence[CaseMetrics]) -> dict:
    """Mean, population std, median and quartiles per region and metric."""
    if len(cases) == 0:
        raise ValueError("need at least one case to summarize")
    summary = {}
    for region in CASE_REGIONS:
        summary[region] = {}
        for metric in METRIC_NAMES:
            v = np.array([c.values[region][metric] for c in cases], dtype=np.float64)
            q25, median, q75 = np.percentile(v, [25, 50, 75])
            summary[region][metric] = {
                "mean": float(v.mean()),
                "std_dev": float(v.std()),
                "median": float(median),
                "quantile_25": float(q25),
                "quantile_75": float(q75),
            }
    return summary


def report(cases: Iterable[CaseMetrics]) -> dict:
    cases = list(cases)
    return {"cases": [c.to_dict() for c in cases], "summary": summarize_cohort(cases)}


def report_csv(cases: Iterable[CaseMetrics]) -> str:
    """One row per case: ``id`` then ``<region>_<metric>`` columns."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id"] + [f"{r}_{m}" for r in CASE_REGIONS for m in METRIC_NAMES])
    for c in cases:
        writer.writerow([c.case_id] + [repr(c.values[r][m]) for r in CASE_REGIONS for m in METRIC_NAMES])
    return buf.getvalue()
