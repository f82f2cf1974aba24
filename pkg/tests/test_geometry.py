import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dloshape.errors import ParameterError
from dloshape.geometry import (
    BinaryImage,
    FourierSegment,
    PolylineCurve,
    Roi,
    concatenate_segments,
    cumulative_lengths,
    curvature_angle,
    curvature_angles,
    densify_polyline,
    fourier_segment,
    orient_first_end_left,
    rasterize,
    resample_polyline,
    sample_keypoint_indices,
    sample_keypoints,
    transform_curve,
    world_image_map,
)


def make_curve(pts):
    return PolylineCurve(np.asarray(pts, dtype=float))


# ---------------------------------------------------------------------------
# fourier_segment
# ---------------------------------------------------------------------------

def test_fourier_bias_only_is_constant():
    seg = FourierSegment(bias=2.0, harmonics=(), frequency=1.0, x_span=(0.0, 1.0), sample_count=3)
    curve = fourier_segment(seg)
    assert np.allclose(curve.points[:, 1], 1.0)
    assert np.allclose(curve.points[:, 0], [0.0, 0.5, 1.0])


def test_fourier_single_cosine_at_zero():
    seg = FourierSegment(bias=0.0, harmonics=((1.0, 0.0),), frequency=1.0, x_span=(0.0, 1.0), sample_count=5)
    curve = fourier_segment(seg)
    assert curve.points[0, 1] == pytest.approx(1.0)


def test_fourier_value_matches_scalar_evaluation():
    # frozen from a direct evaluation of bias/2 + a1*cos(w*x) + b1*sin(w*x)
    seg = FourierSegment(bias=0.4, harmonics=((0.3, -0.2),), frequency=2.0, x_span=(0.0, 1.0), sample_count=3)
    curve = fourier_segment(seg)
    assert curve.points[1, 0] == pytest.approx(0.5)
    assert curve.points[1, 1] == pytest.approx(0.19379649479886263, abs=1e-12)


def test_fourier_x_strictly_increasing():
    seg = FourierSegment(bias=0.1, harmonics=((0.2, 0.1), (0.05, -0.3)), frequency=3.0, x_span=(-1.0, 2.0), sample_count=40)
    xs = fourier_segment(seg).points[:, 0]
    assert np.all(np.diff(xs) > 0)


def test_fourier_invalid_parameters():
    with pytest.raises(ParameterError):
        FourierSegment(bias=0.0, harmonics=(), frequency=1.0, x_span=(1.0, 0.0), sample_count=5)
    with pytest.raises(ParameterError):
        FourierSegment(bias=0.0, harmonics=(), frequency=1.0, x_span=(0.0, 1.0), sample_count=1)


# ---------------------------------------------------------------------------
# concatenate_segments
# ---------------------------------------------------------------------------

def test_concatenate_single_segment_is_identity():
    curve = make_curve([(0, 0), (1, 0.5), (2, 0)])
    out = concatenate_segments([curve])
    assert np.array_equal(out.points, curve.points)


def test_concatenate_two_unit_segments():
    a = make_curve([(0, 0), (1, 0)])
    b = make_curve([(0, 0), (1, 0)])
    out = concatenate_segments([a, b])
    assert np.allclose(out.points, [(0, 0), (1, 0), (2, 0)])


def test_concatenate_point_count_and_continuity():
    rng = np.random.default_rng(7)
    segs = []
    for _ in range(3):
        pts = np.cumsum(rng.uniform(0.05, 0.2, size=(6, 2)), axis=0)
        segs.append(make_curve(pts))
    out = concatenate_segments(segs)
    assert len(out) == sum(len(s) for s in segs) - 2
    # junction continuity: consecutive spacing never collapses to zero
    gaps = np.linalg.norm(np.diff(out.points, axis=0), axis=1)
    assert np.all(gaps > 0)


def test_concatenate_aligns_tangents():
    a = make_curve([(0, 0), (1, 0)])
    b = make_curve([(0, 0), (0, 1), (1, 1)])  # would start orthogonally without alignment
    out = concatenate_segments([a, b])
    t_prev = out.points[1] - out.points[0]
    t_next = out.points[2] - out.points[1]
    cross = t_prev[0] * t_next[1] - t_prev[1] * t_next[0]
    assert abs(cross) < 1e-12


def test_concatenate_empty_list_rejected():
    with pytest.raises(ParameterError):
        concatenate_segments([])


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

def test_curvature_collinear_is_zero():
    curve = make_curve([(0, 0), (1, 0), (2, 0)])
    assert curvature_angle(curve, 1) == 0.0


def test_curvature_right_angle():
    curve = make_curve([(0, 0), (1, 0), (1, 1)])
    assert curvature_angle(curve, 1) == pytest.approx(math.pi / 2)


def test_curvature_oracle_value():
    # frozen from atan2(|cross|, dot) on (1,0) vs (1,0.5)
    curve = make_curve([(0, 0), (1, 0), (2, 0.5)])
    assert curvature_angle(curve, 1) == pytest.approx(0.4636476090008061, abs=1e-12)


def test_curvature_endpoint_rejected():
    curve = make_curve([(0, 0), (1, 0), (2, 0)])
    with pytest.raises(ParameterError):
        curvature_angle(curve, 0)
    with pytest.raises(ParameterError):
        curvature_angle(curve, 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=3, max_size=12))
def test_curvature_range_property(raw):
    pts = np.asarray(raw)
    if np.any(np.all(np.abs(np.diff(pts, axis=0)) < 1e-9, axis=1)):
        return
    curve = PolylineCurve(pts)
    angles = curvature_angles(curve)
    assert np.all(angles >= 0)
    assert np.all(angles <= math.pi + 1e-12)
    for i in range(1, len(curve) - 1):
        assert curvature_angle(curve, i) == pytest.approx(angles[i - 1], abs=1e-12)


# ---------------------------------------------------------------------------
# sample_keypoints
# ---------------------------------------------------------------------------

def test_keypoints_straight_line_equally_spaced():
    xs = np.linspace(0, 1, 151)  # 150 intervals divide evenly into 15 gaps
    curve = make_curve(np.column_stack([xs, np.zeros_like(xs)]))
    kp = sample_keypoints(curve, 16, math.pi / 4)
    assert len(kp) == 16
    spacing = np.diff(kp.points[:, 0])
    assert np.allclose(spacing, spacing[0], atol=1e-9)
    assert np.allclose(kp.points[0], (0, 0))
    assert np.allclose(kp.points[-1], (1, 0))


def test_keypoints_corner_is_substituted():
    # L-shape: exactly one interior point exceeds the threshold
    down = np.column_stack([np.zeros(50), np.linspace(1, 0, 50)])
    right = np.column_stack([np.linspace(0, 1, 50)[1:], np.zeros(49)])
    curve = make_curve(np.vstack([down, right]))
    angles = curvature_angles(curve)
    assert np.sum(angles > math.pi / 4) == 1
    corner = np.argmax(angles) + 1
    idx = sample_keypoint_indices(curve, 16, math.pi / 4)
    assert corner in idx
    assert np.all(np.diff(idx) > 0)


def test_keypoints_monotone_and_exact_count():
    rng = np.random.default_rng(3)
    for _ in range(20):
        pts = np.cumsum(rng.uniform(-0.1, 0.25, size=(40, 2)), axis=0)
        pts[:, 0] = np.linspace(0, 2, 40)
        curve = make_curve(pts)
        idx = sample_keypoint_indices(curve, 16, 0.3)
        assert len(idx) == 16
        assert idx[0] == 0 and idx[-1] == len(curve) - 1
        assert np.all(np.diff(idx) > 0)


def test_keypoints_m_larger_than_curve_rejected():
    curve = make_curve([(0, 0), (1, 0), (2, 0)])
    with pytest.raises(ParameterError):
        sample_keypoint_indices(curve, 4, 0.5)


# ---------------------------------------------------------------------------
# transform_curve
# ---------------------------------------------------------------------------

def test_transform_identity():
    curve = make_curve([(0, 0), (1, 2), (3, 1)])
    out = transform_curve(curve)
    assert np.allclose(out.points, curve.points)


def test_transform_rotation_involution():
    curve = make_curve([(0, 0), (1, 2), (3, 1)])
    out = transform_curve(transform_curve(curve, rotation=math.pi), rotation=math.pi)
    assert np.allclose(out.points, curve.points, atol=1e-9)


def test_transform_translation_exact():
    curve = make_curve([(0, 0), (1, 2), (3, 1)])
    out = transform_curve(curve, translation=(3, -2))
    assert np.allclose(out.points, curve.points + [3, -2])


@settings(max_examples=40, deadline=None)
@given(
    st.floats(-math.pi, math.pi),
    st.floats(-5, 5),
    st.floats(-5, 5),
)
def test_transform_preserves_distances(rot, tx, ty):
    pts = np.array([(0.0, 0.0), (1.0, 0.5), (2.0, -0.25), (2.5, 1.0)])
    curve = PolylineCurve(pts)
    out = transform_curve(curve, translation=(tx, ty), rotation=rot)
    d_in = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    d_out = np.linalg.norm(out.points[:, None] - out.points[None, :], axis=2)
    assert np.allclose(d_in, d_out, rtol=1e-9, atol=1e-9)


# ---------------------------------------------------------------------------
# world <-> image map
# ---------------------------------------------------------------------------

def test_map_center_round_trip():
    imap = world_image_map(Roi(-1, -0.5, 1, 0.5), 128, 64)
    center = np.array([[0.0, 0.0]])
    px = imap.to_image(center)
    assert np.allclose(px, [(63.5, 31.5)])
    assert np.allclose(imap.to_world(px), center)


def test_map_corners():
    imap = world_image_map(Roi(0, 0, 4, 2), 4, 2)
    # cell (0, 0) center is at world (0.5, 0.5)
    assert np.allclose(imap.to_world([[0, 0]]), [(0.5, 0.5)])
    assert np.allclose(imap.to_world([[3, 1]]), [(3.5, 1.5)])


def test_map_random_round_trip_under_one_pixel():
    rng = np.random.default_rng(11)
    imap = world_image_map(Roi(-1, -0.5, 1, 0.5), 128, 64)
    pts = rng.uniform([-1, -0.5], [1, 0.5], size=(200, 2))
    back = imap.to_world(imap.to_image(pts))
    err_px = np.abs(imap.to_image(back) - imap.to_image(pts))
    assert np.max(err_px) < 1.0


# ---------------------------------------------------------------------------
# rasterize
# ---------------------------------------------------------------------------

ROI = Roi(-1, -0.5, 1, 0.5)


def test_rasterize_point_like_curve_single_pixel():
    eps = 1e-6
    curve = make_curve([(0, 0), (eps, 0)])
    img = rasterize(curve, 0.0, 128, 64, ROI)
    assert img.positive_count == 1
    assert img.pixels[32, 64]


def test_rasterize_band_pixel_count():
    # horizontal centerline across the full roi, half_thickness spanning k rows
    curve = make_curve([(-1 + 1e-9, 0.0), (1 - 1e-9, 0.0)])
    du = ROI.width / 128
    half = 1.6 * du  # reaches the centers of roughly 3 rows
    img = rasterize(curve, half, 128, 64, ROI)
    rows = np.unique(np.nonzero(img.pixels)[0])
    k = len(rows)
    assert abs(img.positive_count - 128 * k) <= 2 * 128


def test_rasterize_outside_roi_empty():
    curve = make_curve([(5, 5), (6, 6)])
    img = rasterize(curve, 0.05, 128, 64, ROI)
    assert img.positive_count == 0


def test_rasterize_curve_pixels_near_centerline():
    rng = np.random.default_rng(5)
    pts = np.cumsum(rng.uniform(-0.05, 0.12, size=(30, 2)), axis=0)
    pts -= pts.mean(axis=0)
    curve = make_curve(pts)
    half = 0.02
    img = rasterize(curve, half, 128, 64, ROI)
    imap = world_image_map(ROI, 128, 64)
    du, dv = imap.pixel_size
    dense = densify_polyline(curve.points, 0.5 * min(du, dv))
    # every curve point inside the roi maps to a set pixel
    cells = imap.containing_pixel(dense)
    inb = (cells[:, 0] >= 0) & (cells[:, 0] < 128) & (cells[:, 1] >= 0) & (cells[:, 1] < 64)
    assert np.all(img.pixels[cells[inb, 1], cells[inb, 0]])
    # every set pixel is within half_thickness (+1px slack) of the densified curve
    set_world = imap.to_world(img.positive_coords())
    d = np.min(np.linalg.norm(set_world[:, None] - dense[None, :], axis=2), axis=1)
    assert np.max(d) <= half + max(du, dv)


def test_rasterize_degenerate_roi_rejected():
    with pytest.raises(ParameterError):
        Roi(0, 0, 0, 1)


# ---------------------------------------------------------------------------
# misc helpers
# ---------------------------------------------------------------------------

def test_resample_polyline_uniform():
    pts = np.array([(0, 0), (1, 0), (1, 1)], dtype=float)
    out = resample_polyline(pts, 5)
    assert np.allclose(out[0], (0, 0))
    assert np.allclose(out[-1], (1, 1))
    gaps = np.linalg.norm(np.diff(out, axis=0), axis=1)
    assert np.allclose(gaps, 0.5, atol=1e-9)


def test_cumulative_lengths():
    pts = [(0, 0), (3, 4), (3, 5)]
    assert np.allclose(cumulative_lengths(pts), [0, 5, 6])


def test_orient_first_end_left():
    pts = np.array([(1.0, 0.0), (0.5, 0.2), (0.0, 0.0)])
    out = orient_first_end_left(pts)
    assert np.allclose(out[0], (0, 0))
    already = orient_first_end_left(out)
    assert np.array_equal(already, out)


def test_binary_image_positive_coords():
    px = np.zeros((4, 6), dtype=bool)
    px[1, 2] = True
    px[3, 5] = True
    img = BinaryImage(px)
    assert img.width == 6 and img.height == 4
    assert np.array_equal(img.positive_coords(), [(2, 1), (5, 3)])
