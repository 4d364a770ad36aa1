"""Synthetic 2-D benchmark datasets and input encoders.

Generators produce balanced two-class point clouds with a seeded
numpy Generator, so a (kind, n, noise, seed) tuple is reproducible bit
for bit. The five kinds:

* moons: two interleaved half-circles of radius 1, the second offset
  by (1, 0.5), plus isotropic Gaussian noise;
* circles: concentric circles of radius 1 and 0.5 plus noise;
* spirals: two Archimedean arms making 1.5 turns, plus noise;
* gaussians: unit-covariance blobs with means (-sep/2, 0), (+sep/2, 0);
  the noise argument is ignored since the covariance is fixed, and the
  optimal accuracy has the closed form Phi(sep / 2);
* ring_sector: an annulus split into two angular sectors, plus noise.

Encoding quantizes each feature against K equally spaced thresholds
fitted on the training split. The ternary encoder adds a dead zone of
half-width delta * spacing / 2 around every threshold that emits
UNKNOWN; the binary encoder is a plain thermometer code. K thresholds
cut a feature range into K + 1 bins, so logs describe the setting as
resolution K + 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

DATASET_KINDS = ("moons", "circles", "spirals", "gaussians", "ring_sector")


class DataFormatError(ValueError):
    """A data file failed to parse; the message names the location."""


@dataclass
class Dataset:
    """A labeled point cloud plus its generation metadata."""

    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])


def _moons(n0, n1, noise, rng):
    t0 = rng.uniform(0.0, math.pi, size=n0)
    t1 = rng.uniform(0.0, math.pi, size=n1)
    x0 = np.stack([np.cos(t0), np.sin(t0)], axis=1)
    x1 = np.stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)], axis=1)
    return x0, x1


def _circles(n0, n1, noise, rng):
    t0 = rng.uniform(0.0, 2 * math.pi, size=n0)
    t1 = rng.uniform(0.0, 2 * math.pi, size=n1)
    x0 = np.stack([np.cos(t0), np.sin(t0)], axis=1)
    x1 = 0.5 * np.stack([np.cos(t1), np.sin(t1)], axis=1)
    return x0, x1


def _spirals(n0, n1, noise, rng):
    def arm(n, phase):
        u = rng.uniform(0.0, 1.0, size=n)
        theta = 3.0 * math.pi * u + phase
        r = u
        return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)

    return arm(n0, 0.0), arm(n1, math.pi)


def _gaussians(n0, n1, sep, rng):
    x0 = rng.normal(size=(n0, 2)) + np.array([-sep / 2.0, 0.0])
    x1 = rng.normal(size=(n1, 2)) + np.array([sep / 2.0, 0.0])
    return x0, x1


def _ring_sector(n0, n1, noise, rng):
    def sector(n, lo, hi):
        r = rng.uniform(0.5, 1.5, size=n)
        t = rng.uniform(lo, hi, size=n)
        return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)

    return sector(n0, 0.0, math.pi), sector(n1, math.pi, 2 * math.pi)


def gen_dataset(kind: str, n: int, noise: float, seed: int,
                sep: float = 2.0) -> Dataset:
    """Generate one balanced dataset of n points.

    `sep` only applies to the gaussians kind, where it is the distance
    between the class means in units of the (unit) class spread.
    """
    kind = kind.lower()
    if kind not in DATASET_KINDS:
        raise ValueError(f"unknown dataset kind {kind!r}, expected one of "
                         f"{DATASET_KINDS}")
    if n < 2:
        raise ValueError(f"need at least 2 points, got n={n}")
    if noise < 0:
        raise ValueError(f"noise must be >= 0, got {noise}")
    rng = np.random.default_rng(seed)
    n0 = n // 2 + n % 2
    n1 = n // 2
    if kind == "moons":
        x0, x1 = _moons(n0, n1, noise, rng)
    elif kind == "circles":
        x0, x1 = _circles(n0, n1, noise, rng)
    elif kind == "spirals":
        x0, x1 = _spirals(n0, n1, noise, rng)
    elif kind == "gaussians":
        x0, x1 = _gaussians(n0, n1, sep, rng)
    else:
        x0, x1 = _ring_sector(n0, n1, noise, rng)
    x = np.concatenate([x0, x1])
    y = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    if kind != "gaussians" and noise > 0:
        x = x + rng.normal(0.0, noise, size=x.shape)
    perm = rng.permutation(n)
    meta = {"kind": kind, "n": n, "noise": noise, "seed": seed}
    if kind == "gaussians":
        meta["sep"] = sep
    return Dataset(features=x[perm], labels=y[perm], meta=meta)


def split_dataset(ds: Dataset, n_train: int) -> tuple[Dataset, Dataset]:
    """Split the first n_train points off as the training set."""
    if not 0 < n_train < ds.n:
        raise ValueError(f"n_train must be in (0, {ds.n}), got {n_train}")
    tr = Dataset(ds.features[:n_train], ds.labels[:n_train],
                 dict(ds.meta, split="train", n=n_train))
    te = Dataset(ds.features[n_train:], ds.labels[n_train:],
                 dict(ds.meta, split="test", n=ds.n - n_train))
    return tr, te


def bayes_accuracy_gaussians(sep: float) -> float:
    """Optimal accuracy for the gaussians generator: Phi(sep / 2)."""
    if sep < 0:
        raise ValueError(f"sep must be >= 0, got {sep}")
    return 0.5 * (1.0 + math.erf(sep / 2.0 / math.sqrt(2.0)))


@dataclass(frozen=True)
class EncoderConfig:
    """Threshold encoder fitted on a training split.

    mode is "ternary" (trits with an UNKNOWN dead zone) or "binary"
    (thermometer bits). lo/hi are the per-feature value ranges the
    thresholds were spread over.
    """

    mode: str
    thresholds_per_feature: int  # K
    delta: float
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if self.mode not in ("ternary", "binary"):
            raise ValueError(f"mode must be ternary or binary, got {self.mode!r}")
        if self.thresholds_per_feature < 1:
            raise ValueError("need at least 1 threshold per feature")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have equal length")

    @property
    def resolution(self) -> int:
        """Number of bins the thresholds cut each feature into."""
        return self.thresholds_per_feature + 1

    @property
    def encoded_dim(self) -> int:
        return len(self.lo) * self.thresholds_per_feature

    def feature_thresholds(self, j: int) -> np.ndarray:
        """The K interior thresholds of feature j, equally spaced."""
        k = self.thresholds_per_feature
        lo, hi = self.lo[j], self.hi[j]
        return lo + (hi - lo) * np.arange(1, k + 1) / (k + 1)

    def feature_halfband(self, j: int) -> float:
        """Half-width of the UNKNOWN dead zone around each threshold."""
        spacing = (self.hi[j] - self.lo[j]) / (self.thresholds_per_feature + 1)
        return self.delta * spacing / 2.0


def fit_encoder(train_features: np.ndarray, thresholds_per_feature: int,
                delta: float, mode: str = "ternary") -> EncoderConfig:
    """Fit per-feature ranges on the training split."""
    x = np.atleast_2d(np.asarray(train_features, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("cannot fit an encoder on an empty split")
    if not np.isfinite(x).all():
        raise ValueError("training features contain non-finite values")
    return EncoderConfig(
        mode=mode,
        thresholds_per_feature=thresholds_per_feature,
        delta=delta,
        lo=tuple(float(v) for v in x.min(axis=0)),
        hi=tuple(float(v) for v in x.max(axis=0)),
    )


def encode(x, cfg: EncoderConfig) -> np.ndarray:
    """Encode raw features against the fitted thresholds.

    Returns int8 codes of shape (n, d * K), features blocked together
    in order. Ternary mode emits +1 above threshold + halfband, -1
    below threshold - halfband, 0 inside the dead zone; binary mode
    emits the thermometer bit (x > threshold). Values outside the
    fitted range saturate like any other value.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = len(cfg.lo)
    if x.shape[1] != d:
        raise ValueError(f"encoder fitted on {d} features, got {x.shape[1]}")
    cols = []
    for j in range(d):
        theta = cfg.feature_thresholds(j)
        v = x[:, j][:, None]
        if cfg.mode == "ternary":
            beta = cfg.feature_halfband(j)
            code = np.zeros((x.shape[0], theta.size), dtype=np.int8)
            code[v > theta + beta] = 1
            code[v < theta - beta] = -1
        else:
            code = (v > theta).astype(np.int8)
        cols.append(code)
    return np.concatenate(cols, axis=1)


def encoder_unknown_share(x, cfg: EncoderConfig) -> float:
    """Share of UNKNOWN trits the ternary encoder emits on x."""
    codes = encode(x, cfg)
    return float((codes == 0).mean())


@dataclass(frozen=True)
class CsvSchema:
    """How to read a labeled CSV: which column holds the class label.

    label_col may be an integer position (negatives count from the
    end) or a header name. header=None sniffs the first row: if any
    cell fails to parse as a number it is taken as a header.
    """

    label_col: int | str = -1
    delimiter: str = ","
    header: bool | None = None


def load_csv(path, schema: CsvSchema = CsvSchema()) -> Dataset:
    """Read a feature/label table, validating every cell.

    Labels must be nonnegative integers; features must be finite
    numbers. Malformed content raises DataFormatError naming the line
    and column.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter=schema.delimiter))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataFormatError(f"{path}: no data rows")

    header = schema.header
    names = None
    if header is None:
        try:
            [float(c) for c in rows[0]]
            header = False
        except ValueError:
            header = True
    if header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DataFormatError(f"{path}: header but no data rows")

    if isinstance(schema.label_col, str):
        if names is None or schema.label_col not in names:
            raise DataFormatError(
                f"{path}: label column {schema.label_col!r} not in header")
        label_idx = names.index(schema.label_col)
    else:
        label_idx = schema.label_col % len(rows[0])

    width = len(rows[0])
    features, labels = [], []
    for i, row in enumerate(rows):
        line_no = i + (2 if header else 1)
        if len(row) != width:
            raise DataFormatError(
                f"{path}: line {line_no}: expected {width} fields, got {len(row)}")
        feat = []
        for j, cell in enumerate(row):
            cell = cell.strip()
            if j == label_idx:
                try:
                    lab = int(cell)
                except ValueError:
                    raise DataFormatError(
                        f"{path}: line {line_no}, column {j + 1}: "
                        f"label {cell!r} is not an integer") from None
                if lab < 0:
                    raise DataFormatError(
                        f"{path}: line {line_no}, column {j + 1}: "
                        f"label must be >= 0, got {lab}")
                labels.append(lab)
            else:
                try:
                    v = float(cell)
                except ValueError:
                    raise DataFormatError(
                        f"{path}: line {line_no}, column {j + 1}: "
                        f"{cell!r} is not a number") from None
                if not math.isfinite(v):
                    raise DataFormatError(
                        f"{path}: line {line_no}, column {j + 1}: "
                        f"non-finite value {cell!r}")
                feat.append(v)
        features.append(feat)
    return Dataset(
        features=np.array(features, dtype=float),
        labels=np.array(labels, dtype=np.int64),
        meta={"source": str(path)},
    )
