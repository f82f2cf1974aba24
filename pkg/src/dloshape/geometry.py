"""Planar curve and raster primitives shared by dataset generation, simulation, and planning.

All types are immutable values; every function is pure. Point arrays are
float64 of shape (n, 2) in world units unless a pixel frame is stated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


def as_points(points) -> np.ndarray:
    """Coerce to a float64 (n, 2) array, validating the shape."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ParameterError(f"expected an (n, 2) point array, got shape {pts.shape}")
    return pts


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=arr.dtype, copy=True)
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierSegment:
    """One curve segment y = f(x) built from a truncated Fourier series.

    bias is the zero-frequency coefficient (f contains bias/2), harmonics
    holds (cos, sin) coefficient pairs for harmonics 1..N, frequency is in
    radians per unit x.
    """

    bias: float
    harmonics: tuple[tuple[float, float], ...]
    frequency: float
    x_span: tuple[float, float]
    sample_count: int

    def __post_init__(self):
        x_min, x_max = self.x_span
        if not x_min < x_max:
            raise ParameterError(f"x_span must be increasing, got {self.x_span}")
        if self.sample_count < 2:
            raise ParameterError(f"sample_count must be >= 2, got {self.sample_count}")
        object.__setattr__(self, "harmonics", tuple((float(a), float(b)) for a, b in self.harmonics))


@dataclass(frozen=True)
class PolylineCurve:
    """Ordered 2D point chain; point order defines the parameterization."""

    points: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points)
        if len(pts) < 2:
            raise ParameterError("a curve needs at least 2 points")
        if np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise ParameterError("consecutive curve points must be distinct")
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def total_length(self) -> float:
        return float(cumulative_lengths(self.points)[-1])


IMAGE_FRAME = "image"
WORLD_FRAME = "world"


@dataclass(frozen=True)
class KeypointSequence:
    """m ordered landmark points, running from the first rope end to the last."""

    points: np.ndarray
    frame: str

    def __post_init__(self):
        if self.frame not in (IMAGE_FRAME, WORLD_FRAME):
            raise ParameterError(f"frame must be 'image' or 'world', got {self.frame!r}")
        object.__setattr__(self, "points", _frozen(as_points(self.points)))

    def __len__(self) -> int:
        return len(self.points)

    def reversed(self) -> "KeypointSequence":
        return KeypointSequence(self.points[::-1], self.frame)


@dataclass(frozen=True)
class BinaryImage:
    """W x H bit grid; pixels[v, u] is True where the object is present."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ParameterError(f"pixels must be 2D, got shape {px.shape}")
        object.__setattr__(self, "pixels", _frozen(px.astype(bool)))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def positive_count(self) -> int:
        return int(self.pixels.sum())

    def positive_coords(self) -> np.ndarray:
        """(k, 2) array of (u, v) pixel coordinates of set pixels, row-major order."""
        vs, us = np.nonzero(self.pixels)
        return np.column_stack([us, vs]).astype(np.float64)


@dataclass(frozen=True)
class Roi:
    """Axis-aligned world rectangle observed by the camera."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ParameterError(f"roi must have positive area, got {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min


@dataclass(frozen=True)
class WorldImageMap:
    """Invertible affine map between world coordinates and pixel-center coordinates.

    Pixel (u, v) covers the half-open world cell
    [x_min + u*du, x_min + (u+1)*du) x [y_min + v*dv, y_min + (v+1)*dv),
    so integer (u, v) correspond to cell centers. v grows with world y.
    """

    roi: Roi
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ParameterError("image dims must be positive")

    @property
    def pixel_size(self) -> tuple[float, float]:
        return self.roi.width / self.width, self.roi.height / self.height

    def to_image(self, points) -> np.ndarray:
        pts = as_points(points)
        du, dv = self.pixel_size
        u = (pts[:, 0] - self.roi.x_min) / du - 0.5
        v = (pts[:, 1] - self.roi.y_min) / dv - 0.5
        return np.column_stack([u, v])

    def to_world(self, points) -> np.ndarray:
        pts = as_points(points)
        du, dv = self.pixel_size
        x = self.roi.x_min + (pts[:, 0] + 0.5) * du
        y = self.roi.y_min + (pts[:, 1] + 0.5) * dv
        return np.column_stack([x, y])

    def containing_pixel(self, points) -> np.ndarray:
        """Integer (u, v) of the cell holding each world point (may be out of bounds)."""
        pts = as_points(points)
        du, dv = self.pixel_size
        u = np.floor((pts[:, 0] - self.roi.x_min) / du).astype(np.int64)
        v = np.floor((pts[:, 1] - self.roi.y_min) / dv).astype(np.int64)
        return np.column_stack([u, v])


def world_image_map(roi: Roi, width: int, height: int) -> WorldImageMap:
    return WorldImageMap(roi, width, height)


# ---------------------------------------------------------------------------
# polyline helpers
# ---------------------------------------------------------------------------

def cumulative_lengths(points) -> np.ndarray:
    """Cumulative arc length along a polyline, starting at 0."""
    pts = as_points(points)
    seg = np.linalg.norm(pts[1:] - pts[:-1], axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def resample_polyline(points, n: int) -> np.ndarray:
    """n points equally spaced in arc length along the polyline (ends preserved)."""
    pts = as_points(points)
    if n < 2:
        raise ParameterError("resampling needs n >= 2")
    cum = cumulative_lengths(pts)
    targets = np.linspace(0.0, cum[-1], n)
    x = np.interp(targets, cum, pts[:, 0])
    y = np.interp(targets, cum, pts[:, 1])
    out = np.column_stack([x, y])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out


def densify_polyline(points, max_spacing: float) -> np.ndarray:
    """Subdivide segments so consecutive points are at most max_spacing apart."""
    pts = as_points(points)
    if max_spacing <= 0:
        raise ParameterError("max_spacing must be positive")
    seg = np.linalg.norm(pts[1:] - pts[:-1], axis=1)
    pieces = [pts[:1]]
    for i, length in enumerate(seg):
        k = max(1, int(math.ceil(length / max_spacing)))
        t = np.linspace(0.0, 1.0, k + 1)[1:, None]
        pieces.append(pts[i] + t * (pts[i + 1] - pts[i]))
    return np.vstack(pieces)


def orient_first_end_left(points) -> np.ndarray:
    """Reverse the ordered points when the last end is left of (or below) the first.

    The convention everywhere in this package is that index 0 is the end
    nearer the left border: smaller first coordinate wins, ties fall back to
    the smaller second coordinate.
    """
    pts = as_points(points)
    first, last = pts[0], pts[-1]
    if (last[0], last[1]) < (first[0], first[1]):
        return pts[::-1].copy()
    return pts.copy()


# ---------------------------------------------------------------------------
# curve construction
# ---------------------------------------------------------------------------

def fourier_segment(seg: FourierSegment) -> PolylineCurve:
    """Sample the truncated Fourier series uniformly over its x span."""
    x = np.linspace(seg.x_span[0], seg.x_span[1], seg.sample_count)
    y = np.full_like(x, seg.bias / 2.0)
    for n, (a, b) in enumerate(seg.harmonics, start=1):
        y += a * np.cos(n * seg.frequency * x) + b * np.sin(n * seg.frequency * x)
    return PolylineCurve(np.column_stack([x, y]))


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def concatenate_segments(segments: list[PolylineCurve]) -> PolylineCurve:
    """Chain segments end-to-end into one curve.

    Each subsequent segment is rotated so its incoming tangent continues the
    previous outgoing tangent, then translated so its first point lands on the
    previous last point; the duplicated junction point is dropped.
    """
    if not segments:
        raise ParameterError("need at least one segment")
    merged = segments[0].points.copy()
    for seg in segments[1:]:
        pts = seg.points.copy()
        out_tan = merged[-1] - merged[-2]
        in_tan = pts[1] - pts[0]
        angle = math.atan2(out_tan[1], out_tan[0]) - math.atan2(in_tan[1], in_tan[0])
        pts = (pts - pts[0]) @ _rotation(angle).T + merged[-1]
        merged = np.vstack([merged, pts[1:]])
    return PolylineCurve(merged)


# ---------------------------------------------------------------------------
# curvature and keypoint sampling
# ---------------------------------------------------------------------------

def curvature_angle(curve: PolylineCurve, i: int) -> float:
    """Turning angle at interior point i: angle between the incoming and
    outgoing difference vectors, in [0, pi]."""
    n = len(curve)
    if not 1 <= i <= n - 2:
        raise ParameterError(f"index {i} is not interior to a {n}-point curve")
    pts = curve.points
    v_in = pts[i] - pts[i - 1]
    v_out = pts[i + 1] - pts[i]
    cross = v_in[0] * v_out[1] - v_in[1] * v_out[0]
    dot = float(v_in @ v_out)
    return math.atan2(abs(cross), dot)


def curvature_angles(curve: PolylineCurve) -> np.ndarray:
    """Turning angles for all interior points (length n - 2), vectorized."""
    pts = curve.points
    v_in = pts[1:-1] - pts[:-2]
    v_out = pts[2:] - pts[1:-1]
    cross = v_in[:, 0] * v_out[:, 1] - v_in[:, 1] * v_out[:, 0]
    dot = np.einsum("ij,ij->i", v_in, v_out)
    return np.arctan2(np.abs(cross), dot)


def sample_keypoint_indices(curve: PolylineCurve, m: int, tau_u: float) -> np.ndarray:
    """Indices of m keypoints: uniform in arc length, with sharp turns substituted.

    Candidates sit at uniform cumulative arc length (both curve ends always
    included). Every interior point whose turning angle exceeds tau_u then
    replaces its nearest interior candidate, highest angle first and at most
    one corner per candidate, so the count stays exactly m. The result is
    strictly increasing.
    """
    n = len(curve)
    if m < 2:
        raise ParameterError("m must be >= 2")
    if m > n:
        raise ParameterError(f"m={m} exceeds curve point count {n}")
    cum = cumulative_lengths(curve.points)
    targets = np.linspace(0.0, cum[-1], m)
    cand = np.searchsorted(cum, targets)
    cand = np.clip(cand, 0, n - 1)
    # searchsorted lands on the right neighbour; pull back when the left one is closer
    left = np.clip(cand - 1, 0, n - 1)
    pull = np.abs(cum[left] - targets) <= np.abs(cum[cand] - targets)
    cand = np.where(pull, left, cand)
    cand[0], cand[-1] = 0, n - 1
    cand = _strictly_increasing(cand, n)

    angles = curvature_angles(curve)
    corner_idx = np.nonzero(angles > tau_u)[0] + 1
    if corner_idx.size:
        order = np.argsort(angles[corner_idx - 1])[::-1]
        taken = np.zeros(m, dtype=bool)
        cand_pos = cum[cand].copy()
        for ci in corner_idx[order]:
            if ci in cand:
                continue
            dist = np.abs(cand_pos[1:-1] - cum[ci])
            slots = np.argsort(dist) + 1
            slot = next((s for s in slots if not taken[s]), None)
            if slot is None:
                break
            cand[slot] = ci
            taken[slot] = True
        cand = _strictly_increasing(np.sort(cand), n)
    return cand


def _strictly_increasing(idx: np.ndarray, n: int) -> np.ndarray:
    """Repair ties in a sorted index array by nudging, ends pinned to 0 and n-1.

    Feasible whenever len(idx) <= n (pigeonhole), which the callers guarantee.
    """
    idx = idx.astype(np.int64).copy()
    m = len(idx)
    idx[0], idx[-1] = 0, n - 1
    for k in range(1, m - 1):
        if idx[k] <= idx[k - 1]:
            idx[k] = idx[k - 1] + 1
    for k in range(m - 2, 0, -1):
        if idx[k] >= idx[k + 1]:
            idx[k] = idx[k + 1] - 1
    if idx[0] != 0 or np.any(np.diff(idx) <= 0):
        raise ParameterError("cannot place keypoints: curve has too few points")
    return idx


def sample_keypoints(curve: PolylineCurve, m: int, tau_u: float) -> KeypointSequence:
    idx = sample_keypoint_indices(curve, m, tau_u)
    return KeypointSequence(curve.points[idx], WORLD_FRAME)


# ---------------------------------------------------------------------------
# rigid transform
# ---------------------------------------------------------------------------

def transform_curve(curve: PolylineCurve, translation=(0.0, 0.0), rotation: float = 0.0) -> PolylineCurve:
    """Rigidly rotate the curve about its centroid, then translate it."""
    pts = curve.points
    centroid = pts.mean(axis=0)
    out = (pts - centroid) @ _rotation(rotation).T + centroid
    return PolylineCurve(out + np.asarray(translation, dtype=np.float64))


# ---------------------------------------------------------------------------
# rasterization
# ---------------------------------------------------------------------------

def rasterize(curve: PolylineCurve, half_thickness: float, width: int, height: int, roi: Roi) -> BinaryImage:
    """Render the curve into a W x H bit grid over the roi.

    The curve is densified to sub-half-pixel spacing, then each sample stamps
    its containing cell plus every pixel whose cell center lies within
    half_thickness (world units) of it. Thickening is isotropic in world
    space, so it stays consistent under rotated inputs.
    """
    if half_thickness < 0:
        raise ParameterError("half_thickness must be >= 0")
    imap = world_image_map(roi, width, height)
    du, dv = imap.pixel_size
    dense = densify_polyline(curve.points, 0.5 * min(du, dv))

    grid = np.zeros((height, width), dtype=bool)
    # cull samples that cannot touch the image
    margin = half_thickness
    keep = (
        (dense[:, 0] >= roi.x_min - margin - du)
        & (dense[:, 0] <= roi.x_max + margin + du)
        & (dense[:, 1] >= roi.y_min - margin - dv)
        & (dense[:, 1] <= roi.y_max + margin + dv)
    )
    dense = dense[keep]
    if dense.size == 0:
        return BinaryImage(grid)

    base = imap.containing_pixel(dense)
    inside = (base[:, 0] >= 0) & (base[:, 0] < width) & (base[:, 1] >= 0) & (base[:, 1] < height)
    grid[base[inside, 1], base[inside, 0]] = True

    if half_thickness > 0:
        ru = int(math.ceil(half_thickness / du))
        rv = int(math.ceil(half_thickness / dv))
        off_u, off_v = np.meshgrid(np.arange(-ru, ru + 1), np.arange(-rv, rv + 1))
        off = np.column_stack([off_u.ravel(), off_v.ravel()])
        cand = base[:, None, :] + off[None, :, :]
        centers = imap.to_world(cand.reshape(-1, 2)).reshape(len(dense), -1, 2)
        d2 = np.sum((centers - dense[:, None, :]) ** 2, axis=2)
        ok = d2 <= half_thickness * half_thickness
        cu, cv = cand[..., 0], cand[..., 1]
        ok &= (cu >= 0) & (cu < width) & (cv >= 0) & (cv < height)
        grid[cv[ok], cu[ok]] = True
    return BinaryImage(grid)
