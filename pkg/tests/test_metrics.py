import math

import numpy as np
import pytest

from dloshape.errors import ParameterError
from dloshape.geometry import BinaryImage
from dloshape.metrics import MetricReport, chamfer, iou, l1_pixel, mean_variance_report


def img(arr):
    return BinaryImage(np.asarray(arr, dtype=bool))


def random_img(rng, h=8, w=12, p=0.3):
    return img(rng.random((h, w)) < p)


def test_iou_identical():
    a = img(np.ones((4, 4)))
    assert iou(a, a) == 1.0


def test_iou_disjoint():
    a = np.zeros((4, 4), dtype=bool)
    b = np.zeros((4, 4), dtype=bool)
    a[0, 0] = True
    b[3, 3] = True
    assert iou(img(a), img(b)) == 0.0


def test_iou_half_overlap_bands():
    a = np.zeros((4, 8), dtype=bool)
    b = np.zeros((4, 8), dtype=bool)
    a[1, 0:6] = True
    b[1, 2:8] = True
    # intersection 4, union 8
    assert iou(img(a), img(b)) == pytest.approx(0.5)


def test_iou_empty_defined_zero():
    a = img(np.zeros((4, 4)))
    assert iou(a, a) == 0.0


def test_l1_identical_and_complement():
    a = np.zeros((4, 4), dtype=bool)
    a[1] = True
    assert l1_pixel(img(a), img(a)) == 0.0
    assert l1_pixel(img(a), img(~a)) == 1.0


def test_dim_mismatch_rejected():
    with pytest.raises(ParameterError):
        iou(img(np.zeros((2, 2))), img(np.zeros((3, 2))))
    with pytest.raises(ParameterError):
        l1_pixel(img(np.zeros((2, 2))), img(np.zeros((2, 3))))


def test_chamfer_identity_and_pair():
    pts = np.array([(0.0, 0.0), (1.0, 2.0)])
    assert chamfer(pts, pts) == 0.0
    a = np.array([(0.0, 0.0)])
    b = np.array([(3.0, 4.0)])
    assert chamfer(a, b) == pytest.approx(50.0)  # 2 * d^2 with d = 5


def test_chamfer_empty_rejected():
    with pytest.raises(ParameterError):
        chamfer(np.empty((0, 2)), np.array([(0.0, 0.0)]))


def brute_iou(a, b):
    inter = union = 0
    for va, vb in zip(a.pixels.ravel(), b.pixels.ravel()):
        inter += int(va and vb)
        union += int(va or vb)
    return 0.0 if union == 0 else inter / union


def brute_l1(a, b):
    total = 0
    for va, vb in zip(a.pixels.ravel(), b.pixels.ravel()):
        total += abs(int(va) - int(vb))
    return total / a.pixels.size


def brute_chamfer(a, b):
    def d2(p, q):
        dx, dy = p[0] - q[0], p[1] - q[1]
        return dx * dx + dy * dy  # multiply, not **2: pow() may be 1 ulp off

    def directed(src, dst):
        return math.fsum(min(d2(p, q) for q in dst) for p in src)

    return directed(a, b) + directed(b, a)


def test_metrics_agree_with_brute_force_exactly():
    rng = np.random.default_rng(42)
    for _ in range(200):
        a, b = random_img(rng), random_img(rng)
        assert iou(a, b) == brute_iou(a, b)
        assert l1_pixel(a, b) == brute_l1(a, b)
        pa = rng.normal(size=(rng.integers(1, 12), 2))
        pb = rng.normal(size=(rng.integers(1, 12), 2))
        assert chamfer(pa, pb) == brute_chamfer(pa, pb)


def test_metric_symmetry():
    rng = np.random.default_rng(9)
    for _ in range(50):
        a, b = random_img(rng), random_img(rng)
        assert iou(a, b) == iou(b, a)
        assert l1_pixel(a, b) == l1_pixel(b, a)
        pa = rng.normal(size=(5, 2))
        pb = rng.normal(size=(7, 2))
        assert chamfer(pa, pb) == chamfer(pb, pa)


def test_report_variance_nonnegative():
    rep = mean_variance_report("test", [1.0, 2.0, 3.0])
    assert rep.variance >= 0
    assert rep.sample_count == 3
    with pytest.raises(ParameterError):
        MetricReport(name="bad", value=0.0, sample_count=1, variance=-1.0)
