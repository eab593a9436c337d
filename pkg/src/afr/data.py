"""Delimited-text ingestion, deterministic splits and synthetic tasks.

Input file contract
-------------------
* UTF-8 text, comma- or tab-delimited (detected from the header line).
* First line is a header. One column holds the label; an optional id column
  holds row identifiers; every other column is a real-valued feature.
* Labels are mapped to {-1, +1}: ``"auto"`` accepts {0, 1} (0 -> -1) or
  {-1, +1}; an explicit dict maps raw label strings or numbers.
* A row with an unparseable or non-finite feature cell, or an unmapped label,
  is rejected. With ``on_error="raise"`` (default) the first rejection raises
  :class:`DataError` naming the row (0-based, header excluded) and column;
  with ``on_error="skip"`` rejected rows are dropped and listed in
  ``Dataset.rejected``.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import FeatureMatrix
from .errors import ConfigError, DataError


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray = None
    feature_names: list = None
    ids: list = None
    source: str = ""
    rejected: list = field(default_factory=list)

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def feature_matrix(self):
        if self.labels is None:
            raise DataError(f"dataset {self.source!r} has no labels")
        return FeatureMatrix(self.features, self.labels)

    def subset(self, index, source=None):
        index = np.asarray(index, dtype=int)
        return Dataset(
            self.features[index],
            None if self.labels is None else self.labels[index],
            self.feature_names,
            None if self.ids is None else [self.ids[i] for i in index],
            source or self.source,
        )


def _map_label(raw, mapping):
    if mapping == "auto":
        try:
            v = float(raw)
        except ValueError:
            return None
        return {0.0: -1.0, 1.0: 1.0, -1.0: -1.0}.get(v)
    if raw in mapping:
        return float(mapping[raw])
    try:
        v = float(raw)
    except ValueError:
        return None
    for key, value in mapping.items():
        try:
            if float(key) == v:
                return float(value)
        except (TypeError, ValueError):
            continue
    return None


def _check_mapping(mapping):
    if mapping == "auto":
        return mapping
    if not isinstance(mapping, dict) or not mapping:
        raise ConfigError("label mapping must be 'auto' or a non-empty dict")
    if not set(float(v) for v in mapping.values()) <= {-1.0, 1.0}:
        raise ConfigError("label mapping targets must be -1 or +1")
    return mapping


def _sniff_delimiter(header_line):
    return "\t" if "\t" in header_line else ","


def load_csv(path, label_column="label", mapping="auto", id_column=None, on_error="raise"):
    """Read a delimited feature file. ``label_column=None`` reads features only."""
    if on_error not in ("raise", "skip"):
        raise ConfigError("on_error must be 'raise' or 'skip'")
    mapping = _check_mapping(mapping)
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    if not text.strip():
        raise DataError(f"{path}: file is empty")
    first = text.splitlines()[0]
    rows = list(csv.reader(text.splitlines(), delimiter=_sniff_delimiter(first)))
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]

    if label_column is not None and label_column not in header:
        raise DataError(
            f"{path}: label column {label_column!r} not found; available columns: {header}"
        )
    if id_column is not None and id_column not in header:
        raise DataError(f"{path}: id column {id_column!r} not found; available columns: {header}")
    label_idx = header.index(label_column) if label_column is not None else None
    id_idx = header.index(id_column) if id_column is not None else None
    feat_idx = [i for i in range(len(header)) if i not in (label_idx, id_idx)]

    features, labels, ids, rejected = [], [], [], []
    for row_no, row in enumerate(body):
        reason = None
        if len(row) != len(header):
            reason = (None, f"expected {len(header)} cells, found {len(row)}")
        else:
            values = []
            for i in feat_idx:
                cell = row[i].strip()
                try:
                    v = float(cell)
                except ValueError:
                    reason = (header[i], f"unparseable value {cell!r}")
                    break
                if not math.isfinite(v):
                    reason = (header[i], f"non-finite value {cell!r}")
                    break
                values.append(v)
            if reason is None and label_idx is not None:
                y = _map_label(row[label_idx].strip(), mapping)
                if y is None:
                    reason = (label_column, f"unmapped label {row[label_idx]!r}")
        if reason is not None:
            column, why = reason
            where = f"row {row_no}" + (f", column {column!r}" if column else "")
            if on_error == "raise":
                raise DataError(f"{path}: {where}: {why}")
            rejected.append((row_no, column, why))
            continue
        features.append(values)
        if label_idx is not None:
            labels.append(y)
        ids.append(row[id_idx].strip() if id_idx is not None else str(row_no))

    X = np.array(features, dtype=float).reshape(len(features), len(feat_idx))
    return Dataset(
        X,
        np.array(labels, dtype=float) if label_idx is not None else None,
        [header[i] for i in feat_idx],
        ids,
        str(path),
        rejected,
    )


def write_csv(path, ds, label_column="label", id_column=None):
    """Write ``ds`` in the input file contract (labels written as -1/1)."""
    header = ([id_column] if id_column else []) + list(ds.feature_names)
    if ds.labels is not None:
        header.append(label_column)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(ds)):
            row = ([ds.ids[i]] if id_column else []) + [repr(float(v)) for v in ds.features[i]]
            if ds.labels is not None:
                row.append(str(int(ds.labels[i])))
            w.writerow(row)


def split_sizes(n, fractions):
    """Sizes by floor, then leftover rows one at a time to the largest remainders.

    Leftovers are only handed out when the fractions sum to 1; otherwise the
    unassigned rows are dropped. Ties go to the earlier part.
    """
    fractions = [float(f) for f in fractions]
    if not fractions or any(f <= 0 for f in fractions):
        raise ConfigError("split fractions must be positive")
    total = sum(fractions)
    if total > 1.0 + 1e-9:
        raise ConfigError(f"split fractions sum to {total} > 1")
    raw = [f * n for f in fractions]
    sizes = [int(math.floor(r + 1e-9)) for r in raw]
    if abs(total - 1.0) <= 1e-9:
        leftover = n - sum(sizes)
        order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - sizes[i]), i))
        for i in order[:leftover]:
            sizes[i] += 1
    return sizes


def split(ds, fractions=(0.8, 0.1, 0.1), seed=0):
    """Shuffle with ``seed`` and cut into ``len(fractions)`` disjoint parts."""
    sizes = split_sizes(len(ds), fractions)
    perm = np.random.default_rng(seed).permutation(len(ds))
    parts, start = [], 0
    for k, size in enumerate(sizes):
        parts.append(ds.subset(perm[start:start + size], f"{ds.source}[part {k}]"))
        start += size
    return tuple(parts)


# --------------------------------------------------------------------------
# synthetic sparse additive tasks
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 500
    p: int = 20
    support: tuple = (3, 8, 14)
    freqs: tuple = (1.0, 1.0, 1.0)
    amps: tuple = (1.0, 1.0, 1.0)
    noise: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ConfigError("n and p must be positive")
        if len(set(self.support)) != len(self.support):
            raise ConfigError("support indices must be distinct")
        if not all(0 <= j < self.p for j in self.support):
            raise ConfigError(f"support {self.support} is not a subset of 0..{self.p - 1}")
        if not (len(self.freqs) == len(self.amps) == len(self.support)):
            raise ConfigError("freqs and amps need one entry per support index")
        if not 0.0 <= self.noise < 0.5:
            raise ConfigError("noise rate must lie in [0, 0.5)")


@dataclass
class GroundTruth:
    support: tuple
    freqs: tuple
    amps: tuple
    latent: np.ndarray
    threshold: float
    flipped: np.ndarray

    def component(self, j, x):
        """Generating component for feature ``j`` (zero off the support)."""
        x = np.asarray(x, dtype=float)
        if j not in self.support:
            return np.zeros_like(x)
        k = self.support.index(j)
        return self.amps[k] * np.sin(2.0 * np.pi * self.freqs[k] * x)


def generate_synthetic(spec=SyntheticSpec()):
    """Uniform features on [0,1]^p, labels from a median-centred sum of sinusoids.

    Exactly ``round(noise * n)`` labels, chosen uniformly, are flipped.
    """
    rng = np.random.default_rng(spec.seed)
    X = rng.uniform(0.0, 1.0, size=(spec.n, spec.p))
    g = np.zeros(spec.n)
    for j, f, a in zip(spec.support, spec.freqs, spec.amps):
        g += a * np.sin(2.0 * np.pi * f * X[:, j])
    med = float(np.median(g))
    y = np.where(g - med >= 0.0, 1.0, -1.0)
    flipped = np.sort(rng.choice(spec.n, size=int(round(spec.noise * spec.n)), replace=False))
    y[flipped] *= -1.0
    ds = Dataset(X, y, [f"x{j}" for j in range(spec.p)], [str(i) for i in range(spec.n)],
                 f"synthetic(seed={spec.seed})")
    truth = GroundTruth(tuple(spec.support), tuple(spec.freqs), tuple(spec.amps), g, med, flipped)
    return ds, truth
