"""Synthetic labeled samples: random chained Fourier curves rendered to binary
images with ordered keypoint labels, persisted bit-exactly.

On-disk layout of a dataset directory:

    manifest.txt            human-readable key/value manifest (config echo,
                            seed scheme, one line per sample)
    train/sample_*.dlo      binary sample records
    test/sample_*.dlo

Record format (all integers little-endian):

    bytes 0..3    magic b"DLSR"
    bytes 4..5    format version (currently 1)
    bytes 6..7    image width in pixels
    bytes 8..9    image height
    bytes 10..11  keypoint count m
    then          height rows of ceil(width/8) bytes, MSB-first bit packing
    then          m pairs of float32 (u, v) keypoint coordinates, image frame

Per-sample randomness comes from numpy's splittable
``SeedSequence(master_seed, sample_index, attempt)``, so any sample can be
regenerated in isolation and generation parallelizes without changing output.
"""

from __future__ import annotations

import ast
import hashlib
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError, ScenarioError
from .geometry import (
    BinaryImage,
    FourierSegment,
    KeypointSequence,
    PolylineCurve,
    Roi,
    concatenate_segments,
    fourier_segment,
    orient_first_end_left,
    rasterize,
    sample_keypoint_indices,
    transform_curve,
    world_image_map,
)

MAGIC = b"DLSR"
FORMAT_VERSION = 1
MAX_ATTEMPTS = 16
SEED_SCHEME = "numpy.random.SeedSequence(master_seed, sample_index, attempt)"


@dataclass(frozen=True)
class GenConfig:
    """Everything that determines dataset content. Ranges are inclusive."""

    seed: int = 0
    samples: int = 7040
    m: int = 16
    width: int = 128
    height: int = 64
    roi: tuple[float, float, float, float] = (-1.0, -0.5, 1.0, 0.5)
    segment_count: tuple[int, int] = (2, 5)
    harmonics: tuple[int, int] = (1, 4)
    coeff_range: tuple[float, float] = (0.03, 0.22)
    frequency_range: tuple[float, float] = (3.0, 13.0)
    segment_length_range: tuple[float, float] = (0.25, 0.65)
    half_thickness_range: tuple[float, float] = (0.012, 0.028)
    points_per_segment: int = 60
    tau_u: float = math.pi / 4
    split_ratio: tuple[int, int] = (10, 1)

    def __post_init__(self):
        if self.samples < 1:
            raise ParameterError("samples must be >= 1")
        if self.m < 2:
            raise ParameterError("m must be >= 2")
        for name in ("segment_count", "harmonics", "coeff_range", "frequency_range",
                     "segment_length_range", "half_thickness_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ParameterError(f"{name} range is empty: {lo} > {hi}")
        if self.split_ratio[0] < 1 or self.split_ratio[1] < 0:
            raise ParameterError("split_ratio must be (train >= 1, test >= 0)")

    @property
    def world_roi(self) -> Roi:
        return Roi(*self.roi)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict, where: str = "gen config") -> "GenConfig":
        fields = {f: t for f, t in cls.__dataclass_fields__.items()}
        unknown = set(data) - set(fields)
        if unknown:
            raise ScenarioError(f"{where}: unknown keys {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            default = getattr(cls, key, None)
            if isinstance(default, tuple) or key in ("roi",):
                value = tuple(value)
            kwargs[key] = value
        try:
            return cls(**kwargs)
        except (TypeError, ParameterError) as exc:
            raise ScenarioError(f"{where}: {exc}") from exc

    def digest(self) -> str:
        payload = repr(sorted(self.to_dict().items())).encode()
        return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class LabeledSample:
    """A rendered rope image plus its m ordered keypoint labels (image frame)."""

    image: BinaryImage
    keypoints: KeypointSequence
    meta: dict | None = None

    def __post_init__(self):
        if self.keypoints.frame != "image":
            raise ParameterError("labels must be in the image frame")


def _uniform(rng, lo_hi) -> float:
    lo, hi = lo_hi
    return float(rng.uniform(lo, hi))


def _draw_curve(config: GenConfig, rng: np.random.Generator) -> PolylineCurve:
    n_seg = int(rng.integers(config.segment_count[0], config.segment_count[1] + 1))
    segments = []
    for _ in range(n_seg):
        n_harm = int(rng.integers(config.harmonics[0], config.harmonics[1] + 1))
        amp = _uniform(rng, config.coeff_range)
        harmonics = tuple(
            (float(rng.uniform(-amp, amp)) / n, float(rng.uniform(-amp, amp)) / n)
            for n in range(1, n_harm + 1)
        )
        freq = _uniform(rng, config.frequency_range)
        length = _uniform(rng, config.segment_length_range)
        x0 = float(rng.uniform(0.0, 2.0 * math.pi / freq))
        seg = FourierSegment(
            bias=float(rng.uniform(-amp, amp)),
            harmonics=harmonics,
            frequency=freq,
            x_span=(x0, x0 + length),
            sample_count=config.points_per_segment,
        )
        segments.append(fourier_segment(seg))
    return concatenate_segments(segments)


def _attempt_sample(config: GenConfig, rng: np.random.Generator) -> tuple[BinaryImage, np.ndarray, dict] | None:
    curve = _draw_curve(config, rng)
    kp_idx = sample_keypoint_indices(curve, config.m, config.tau_u)

    angle = float(rng.uniform(0.0, 2.0 * math.pi))
    curve = transform_curve(curve, rotation=angle)
    half = _uniform(rng, config.half_thickness_range)

    roi = config.world_roi
    imap = world_image_map(roi, config.width, config.height)
    pad = half + 2.0 * max(imap.pixel_size)
    lo = np.array([roi.x_min + pad, roi.y_min + pad]) - curve.points.min(axis=0)
    hi = np.array([roi.x_max - pad, roi.y_max - pad]) - curve.points.max(axis=0)
    if np.any(hi < lo):
        return None  # curve too large for the roi at this rotation
    shift = rng.uniform(lo, hi)
    curve = transform_curve(curve, translation=shift)

    image = rasterize(curve, half, config.width, config.height, roi)
    if image.positive_count < 0.01 * config.width * config.height:
        return None

    labels = imap.to_image(curve.points[kp_idx])
    labels = orient_first_end_left(labels)
    cells = np.rint(labels).astype(int)
    on = image.pixels[np.clip(cells[:, 1], 0, config.height - 1), np.clip(cells[:, 0], 0, config.width - 1)]
    inb = (cells[:, 0] >= 0) & (cells[:, 0] < config.width) & (cells[:, 1] >= 0) & (cells[:, 1] < config.height)
    if not np.all(on & inb):
        return None
    meta = {"half_thickness": half, "rotation": angle, "n_points": len(curve)}
    return image, labels, meta


def generate_sample(config: GenConfig, index: int) -> LabeledSample:
    """Deterministic sample for (config, index); bounded rejection-resampling."""
    for attempt in range(MAX_ATTEMPTS):
        rng = np.random.default_rng(np.random.SeedSequence((config.seed, index, attempt)))
        result = _attempt_sample(config, rng)
        if result is not None:
            image, labels, meta = result
            meta.update({"seed": config.seed, "index": index, "attempt": attempt})
            return LabeledSample(image, KeypointSequence(labels, "image"), meta)
    raise ParameterError(f"sample {index}: no valid curve after {MAX_ATTEMPTS} attempts; widen the config ranges")


# ---------------------------------------------------------------------------
# record serialization
# ---------------------------------------------------------------------------

def sample_to_bytes(sample: LabeledSample) -> bytes:
    img = sample.image
    header = MAGIC + struct.pack("<HHHH", FORMAT_VERSION, img.width, img.height, len(sample.keypoints))
    rows = np.packbits(img.pixels, axis=1, bitorder="big").tobytes()
    kps = sample.keypoints.points.astype("<f4").tobytes()
    return header + rows + kps


def sample_from_bytes(data: bytes) -> LabeledSample:
    if len(data) < 12:
        raise FormatError("record truncated before header end", offset=len(data))
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}", offset=0)
    version, width, height, m = struct.unpack("<HHHH", data[4:12])
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}", offset=4)
    row_bytes = (width + 7) // 8
    expected = 12 + height * row_bytes + m * 8
    if len(data) != expected:
        raise FormatError(
            f"record size {len(data)} does not match header (expected {expected}); "
            "truncated, trailing, or non-little-endian header",
            offset=min(len(data), expected),
        )
    packed = np.frombuffer(data, dtype=np.uint8, count=height * row_bytes, offset=12)
    pixels = np.unpackbits(packed.reshape(height, row_bytes), axis=1, bitorder="big")[:, :width].astype(bool)
    kps = np.frombuffer(data, dtype="<f4", count=m * 2, offset=12 + height * row_bytes)
    return LabeledSample(BinaryImage(pixels), KeypointSequence(kps.reshape(m, 2).astype(np.float64), "image"))


def save_sample(sample: LabeledSample, path: Path):
    Path(path).write_bytes(sample_to_bytes(sample))


def load_sample(path) -> LabeledSample:
    return sample_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# dataset generation
# ---------------------------------------------------------------------------

def split_of_index(config: GenConfig, index: int) -> str:
    train, test = config.split_ratio
    return "train" if index % (train + test) < train else "test"


def split_counts(config: GenConfig) -> tuple[int, int]:
    train = sum(1 for i in range(config.samples) if split_of_index(config, i) == "train")
    return train, config.samples - train


def sample_relpath(config: GenConfig, index: int) -> str:
    return f"{split_of_index(config, index)}/sample_{index:07d}.dlo"


def _generate_one(args) -> tuple[int, int]:
    config, index, out_dir = args
    sample = generate_sample(config, index)
    path = Path(out_dir) / sample_relpath(config, index)
    save_sample(sample, path)
    return index, sample.meta["attempt"]


def generate_dataset(config: GenConfig, out_dir, jobs: int = 1) -> dict:
    """Write all samples plus manifest.txt; returns a summary dict.

    Output is a pure function of the config: worker count only affects speed.
    """
    out = Path(out_dir)
    (out / "train").mkdir(parents=True, exist_ok=True)
    (out / "test").mkdir(parents=True, exist_ok=True)

    tasks = [(config, i, out) for i in range(config.samples)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            attempts = dict(pool.map(_generate_one, tasks, chunksize=64))
    else:
        attempts = dict(map(_generate_one, tasks))

    lines = [
        "# dloshape dataset manifest",
        "format_version = 1",
        f"config_digest = {config.digest()}",
        f"seed_scheme = {SEED_SCHEME}",
        "",
        "[config]",
    ]
    for key, value in config.to_dict().items():
        lines.append(f"{key} = {value!r}")
    lines += ["", "[samples]"]
    for i in range(config.samples):
        lines.append(f"{i} {split_of_index(config, i)} {sample_relpath(config, i)} attempt={attempts[i]}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")

    train, test = split_counts(config)
    return {"out": str(out), "train": train, "test": test, "config_digest": config.digest()}


def read_manifest(dataset_dir) -> tuple[GenConfig, list[tuple[int, str, str]]]:
    """Parse manifest.txt back into (config, [(index, split, relpath), ...])."""
    path = Path(dataset_dir) / "manifest.txt"
    if not path.exists():
        raise FormatError(f"no manifest.txt under {dataset_dir}")
    section = None
    config_data: dict = {}
    rows: list[tuple[int, str, str]] = []
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            section = line.strip("[]")
            continue
        if section == "config":
            key, _, value = line.partition(" = ")
            config_data[key] = ast.literal_eval(value)
        elif section == "samples":
            parts = line.split()
            rows.append((int(parts[0]), parts[1], parts[2]))
    return GenConfig.from_dict(config_data, where=str(path)), rows


def iter_split(dataset_dir, split: str):
    """Yield (index, LabeledSample) for one split, in index order."""
    _, rows = read_manifest(dataset_dir)
    for index, s, relpath in rows:
        if s == split:
            yield index, load_sample(Path(dataset_dir) / relpath)
