"""Shape-similarity metrics shared by perception evaluation and episode scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .geometry import BinaryImage, as_points


@dataclass(frozen=True)
class MetricReport:
    name: str
    value: float
    sample_count: int
    mean: float | None = None
    variance: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.variance is not None and self.variance < 0:
            raise ParameterError("variance must be >= 0")


def _check_dims(a: BinaryImage, b: BinaryImage):
    if a.pixels.shape != b.pixels.shape:
        raise ParameterError(f"image dims differ: {a.pixels.shape} vs {b.pixels.shape}")


def iou(a: BinaryImage, b: BinaryImage) -> float:
    """Intersection over union of two same-size bit grids; 0 when both are empty."""
    _check_dims(a, b)
    union = int(np.count_nonzero(a.pixels | b.pixels))
    if union == 0:
        return 0.0
    inter = int(np.count_nonzero(a.pixels & b.pixels))
    return inter / union

def l1_pixel(a: BinaryImage, b: BinaryImage) -> float:
    """Mean per-pixel absolute difference (equals symmetric-difference fraction)."""
    _check_dims(a, b)
    diff = int(np.count_nonzero(a.pixels ^ b.pixels))
    return diff / a.pixels.size


def chamfer(a, b) -> float:
    """Symmetric sum of squared nearest-neighbor distances between two point sets."""
    pa, pb = as_points(a), as_points(b)
    if len(pa) == 0 or len(pb) == 0:
        raise ParameterError("chamfer distance needs non-empty point sets")
    return _directed_sq(pa, pb) + _directed_sq(pb, pa)


def _directed_sq(src: np.ndarray, dst: np.ndarray) -> float:
    # explicit multiplies: scalar x**2 takes the libm pow path, which can be
    # one ulp away from the IEEE product and breaks exact oracle agreement
    dx = src[:, 0][:, None] - dst[:, 0][None, :]
    dy = src[:, 1][:, None] - dst[:, 1][None, :]
    mins = np.min(dx * dx + dy * dy, axis=1)
    return math.fsum(float(v) for v in mins)


def mean_variance_report(name: str, values, note: str = "") -> MetricReport:
    """Population mean/variance report over per-sample metric values."""
    vals = np.asarray(list(values), dtype=np.float64)
    if vals.size == 0:
        raise ParameterError("no values to aggregate")
    mean = float(vals.mean())
    var = float(vals.var())
    return MetricReport(name=name, value=mean, sample_count=int(vals.size), mean=mean, variance=var, note=note)
