"""Geometric keypoint detection from binary rope images.

The reference detector skeletonizes the image by two-subiteration thinning,
orders the skeleton by nearest-neighbor traversal from the leftmost endpoint,
and samples m points uniformly along the traversal. A geometric finetuning
pass then moves any off-body point back onto the rope: ends snap to the
nearest positive pixel, interior points search along the perpendicular to
their local tangent.

Any detector with the same ``(BinaryImage, m) -> KeypointSequence`` signature
can be evaluated and finetuned through the same entry points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyImageError, ParameterError, SkeletonAmbiguityError
from .geometry import (
    BinaryImage,
    KeypointSequence,
    PolylineCurve,
    Roi,
    orient_first_end_left,
    rasterize,
    resample_polyline,
)

# 4-connected offsets first so unit steps beat diagonal ones; order fixes ties
_NEIGHBOR_OFFSETS = ((0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class Skeleton:
    """1-pixel-wide 8-connected thinning result."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask).astype(bool)
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)

    @property
    def pixel_count(self) -> int:
        return int(self.mask.sum())

    def pixel_coords(self) -> np.ndarray:
        vs, us = np.nonzero(self.mask)
        return np.column_stack([us, vs])

    def endpoints(self) -> list[tuple[int, int]]:
        """(u, v) skeleton pixels with exactly one 8-connected skeleton neighbor."""
        counts = _neighbor_counts(self.mask)
        vs, us = np.nonzero(self.mask & (counts == 1))
        return [(int(u), int(v)) for u, v in zip(us, vs)]


def _neighbor_counts(mask: np.ndarray) -> np.ndarray:
    padded = np.pad(mask, 1).astype(np.uint8)
    total = np.zeros_like(padded, dtype=np.uint8)
    for du, dv in _NEIGHBOR_OFFSETS:
        total += np.roll(np.roll(padded, dv, axis=0), du, axis=1)
    return total[1:-1, 1:-1]


def skeletonize(image: BinaryImage) -> Skeleton:
    """Iterative two-subiteration thinning to a 1-pixel skeleton (fixpoint)."""
    if image.positive_count == 0:
        raise EmptyImageError("cannot skeletonize an all-zero image")
    img = np.pad(image.pixels, 1).astype(np.uint8)
    while True:
        changed = False
        for step in (0, 1):
            p = [
                img[:-2, 1:-1],  # P2 north
                img[:-2, 2:],    # P3 north-east
                img[1:-1, 2:],   # P4 east
                img[2:, 2:],     # P5 south-east
                img[2:, 1:-1],   # P6 south
                img[2:, :-2],    # P7 south-west
                img[1:-1, :-2],  # P8 west
                img[:-2, :-2],   # P9 north-west
            ]
            b = sum(x.astype(np.int16) for x in p)
            ring = p + [p[0]]
            a = sum(((ring[i] == 0) & (ring[i + 1] == 1)) for i in range(8))
            if step == 0:
                no_corner = (p[0] * p[2] * p[4] == 0) & (p[2] * p[4] * p[6] == 0)
            else:
                no_corner = (p[0] * p[2] * p[6] == 0) & (p[0] * p[4] * p[6] == 0)
            remove = (img[1:-1, 1:-1] == 1) & (b >= 2) & (b <= 6) & (a == 1) & no_corner
            if np.any(remove):
                img[1:-1, 1:-1][remove] = 0
                changed = True
        if not changed:
            break
    return Skeleton(img[1:-1, 1:-1].astype(bool))


def prune_spurs(skeleton: Skeleton, min_length: int = 3) -> Skeleton:
    """Drop side branches shorter than min_length pixels (measured to a junction)."""
    mask = skeleton.mask.copy()
    while True:
        counts = _neighbor_counts(mask)
        removed = False
        for u, v in Skeleton(mask).endpoints():
            path = [(u, v)]
            pu, pv = u, v
            prev = None
            hit_junction = False
            while len(path) <= min_length:
                nbrs = [
                    (pu + du, pv + dv)
                    for du, dv in _NEIGHBOR_OFFSETS
                    if 0 <= pv + dv < mask.shape[0]
                    and 0 <= pu + du < mask.shape[1]
                    and mask[pv + dv, pu + du]
                    and (pu + du, pv + dv) != prev
                ]
                if len(nbrs) != 1:
                    hit_junction = len(nbrs) > 1 or counts[pv, pu] >= 3
                    break
                prev = (pu, pv)
                pu, pv = nbrs[0]
                if counts[pv, pu] >= 3:
                    hit_junction = True
                    break
                path.append((pu, pv))
            if hit_junction and len(path) < min_length:
                for qu, qv in path:
                    mask[qv, qu] = False
                removed = True
        if not removed:
            return Skeleton(mask)


def _traverse(mask: np.ndarray, start: tuple[int, int]) -> np.ndarray:
    """Greedy nearest-neighbor ordering of all skeleton pixels.

    Follows 8-neighbors while possible (unit steps before diagonals, fixed
    offset order for ties); when the walk dead-ends with pixels left, it jumps
    to the nearest unvisited pixel and continues, so every pixel is ordered.
    """
    height, width = mask.shape
    visited = np.zeros_like(mask, dtype=bool)
    remaining = int(mask.sum())
    path = [start]
    visited[start[1], start[0]] = True
    remaining -= 1
    u, v = start
    while remaining > 0:
        nxt = None
        for du, dv in _NEIGHBOR_OFFSETS:
            nu, nv = u + du, v + dv
            if 0 <= nv < height and 0 <= nu < width and mask[nv, nu] and not visited[nv, nu]:
                nxt = (nu, nv)
                break
        if nxt is None:
            vs, us = np.nonzero(mask & ~visited)
            d2 = (us - u) ** 2 + (vs - v) ** 2
            k = int(np.argmin(d2))  # ties resolve to row-major order
            nxt = (int(us[k]), int(vs[k]))
        u, v = nxt
        visited[v, u] = True
        remaining -= 1
        path.append(nxt)
    return np.asarray(path, dtype=np.float64)


def detect_keypoints_geometric(image: BinaryImage, m: int, strict: bool = True) -> KeypointSequence:
    """Detect m ordered keypoints; the first is the end nearest the left border.

    With strict=True a skeleton without exactly two endpoints (after spur
    pruning) raises SkeletonAmbiguityError; strict=False falls back to a
    best-effort start pixel so batch evaluation always yields a sequence.
    """
    skeleton = prune_spurs(skeletonize(image))
    if skeleton.pixel_count < m:
        raise ParameterError(f"skeleton has {skeleton.pixel_count} pixels, fewer than m={m}")
    endpoints = skeleton.endpoints()
    if len(endpoints) != 2 and strict:
        raise SkeletonAmbiguityError(len(endpoints))
    if endpoints:
        start = min(endpoints)
    else:
        coords = skeleton.pixel_coords()
        start = tuple(coords[np.lexsort((coords[:, 1], coords[:, 0]))[0]])
    path = _traverse(skeleton.mask, (int(start[0]), int(start[1])))
    if len(endpoints) == 2:
        # anything ordered after the far endpoint is a back-filled loop remnant;
        # the rope runs end to end, so cut the ordering there
        far = max(endpoints)
        hits = np.nonzero((path[:, 0] == far[0]) & (path[:, 1] == far[1]))[0]
        if hits.size and hits[0] >= 1:
            path = path[: hits[0] + 1]
    if len(path) < 2:
        raise ParameterError("skeleton traversal degenerated to a single pixel")
    # the ordering invariant (first keypoint = end nearer the left border) must
    # hold on the output even when a rope end merged into a loop and the walk
    # had to start from the surviving endpoint
    return KeypointSequence(orient_first_end_left(resample_polyline(path, m)), "image")


# ---------------------------------------------------------------------------
# geometric finetuning
# ---------------------------------------------------------------------------

def _on_body(image: BinaryImage, point: np.ndarray) -> bool:
    u, v = int(round(point[0])), int(round(point[1]))
    return 0 <= v < image.height and 0 <= u < image.width and bool(image.pixels[v, u])


def _nearest_positive(image: BinaryImage, point: np.ndarray) -> np.ndarray:
    coords = image.positive_coords()
    d2 = np.sum((coords - point) ** 2, axis=1)
    return coords[int(np.argmin(d2))]  # argmin tie falls to row-major order: smaller v, then u


def finetune_keypoints(raw: KeypointSequence, image: BinaryImage) -> KeypointSequence:
    """Move every off-body keypoint onto a positive pixel.

    Ends snap to the nearest positive pixel. Interior points search both ways
    along the perpendicular of the raw tangent (p[j+1] - p[j-1]) in half-pixel
    steps out to the image diagonal, nearer hit first and ties toward smaller
    v; if the search exhausts the image, they snap like ends do.
    """
    if image.positive_count == 0:
        raise EmptyImageError("cannot finetune against an all-zero image")
    pts = raw.points.copy()
    m = len(pts)
    diag = math.hypot(image.width, image.height)
    for j in range(m):
        if _on_body(image, pts[j]):
            continue
        if j in (0, m - 1):
            pts[j] = _nearest_positive(image, pts[j])
            continue
        delta = raw.points[j + 1] - raw.points[j - 1]
        norm = np.linalg.norm(delta)
        if norm < 1e-12:
            pts[j] = _nearest_positive(image, pts[j])
            continue
        perp = np.array([-delta[1], delta[0]]) / norm
        hit = None
        t = 0.5
        while t <= diag:
            cands = []
            for sign in (1.0, -1.0):
                cand = raw.points[j] + sign * t * perp
                if _on_body(image, cand):
                    cands.append((round(cand[1]), round(cand[0])))
            if cands:
                v, u = min(cands)
                hit = np.array([u, v], dtype=np.float64)
                break
            t += 0.5
        pts[j] = hit if hit is not None else _nearest_positive(image, pts[j])
    return KeypointSequence(pts, raw.frame)


def on_body_count(kps: KeypointSequence, image: BinaryImage) -> int:
    return sum(_on_body(image, p) for p in kps.points)


# ---------------------------------------------------------------------------
# detection metrics and reconstruction
# ---------------------------------------------------------------------------

def corner_error(pred: KeypointSequence, truth: KeypointSequence) -> float:
    """Mean end-point error: average distance between the two first and last points."""
    _check_match(pred, truth)
    d1 = np.linalg.norm(pred.points[0] - truth.points[0])
    dm = np.linalg.norm(pred.points[-1] - truth.points[-1])
    return float(0.5 * (d1 + dm))


def keypoint_error(pred: KeypointSequence, truth: KeypointSequence) -> float:
    """Mean index-wise distance over all m keypoints."""
    _check_match(pred, truth)
    return float(np.mean(np.linalg.norm(pred.points - truth.points, axis=1)))


def _check_match(pred: KeypointSequence, truth: KeypointSequence):
    if len(pred) != len(truth):
        raise ParameterError(f"sequence lengths differ: {len(pred)} vs {len(truth)}")


def reconstruct_from_keypoints(kps: KeypointSequence, half_thickness_px: float,
                               width: int, height: int) -> BinaryImage:
    """Rasterize the keypoint polyline back into image dims (thickness in pixels)."""
    if len(kps) < 2:
        raise ParameterError("need at least 2 keypoints to reconstruct")
    pixel_roi = Roi(-0.5, -0.5, width - 0.5, height - 0.5)  # world == pixel coords
    return rasterize(PolylineCurve(kps.points), half_thickness_px, width, height, pixel_roi)


def estimate_half_thickness_px(image: BinaryImage) -> float:
    """Band half-width estimate: area over twice the skeleton length."""
    skeleton = skeletonize(image)
    length = max(skeleton.pixel_count - 1, 1)
    return max(image.positive_count / (2.0 * length), 0.5)
