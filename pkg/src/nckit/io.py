"""Bit-exact binary formats for activation packs, classifier snapshots, and manifests.

Activation pack (``.ncap``)::

    magic   b"NCAP"                      4 bytes
    version u32 little-endian   (== 1)   4 bytes
    p, C, N u32 little-endian            12 bytes
    payload C*N*p float64 little-endian, row-major, rows grouped by
            class in ascending class index

Classifier snapshot (``.nclf``)::

    magic   b"NCLF"                      4 bytes
    version u32 little-endian   (== 1)   4 bytes
    C, p    u32 little-endian            8 bytes
    payload C*p float64 (weights, row-major) then C float64 (biases)

There is no padding anywhere. Readers validate the magic, the version, the
declared sizes, and finiteness of every float before returning a value, and
refuse to allocate payloads larger than a configurable cap.

The epoch manifest is a UTF-8 JSON document::

    {"epochs": [{"epoch": 0, "pack": "...", "classifier": "...",
                 "test_pack": "..."}],
     "meta": {"dataset": "...", ...}}

``classifier`` and ``test_pack`` are optional per epoch. Relative paths are
resolved against the manifest's own directory.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_consistent_length, check_labels

PACK_MAGIC = b"NCAP"
CLASSIFIER_MAGIC = b"NCLF"
FORMAT_VERSION = 1

# Readers refuse declared payloads above this many bytes (untrusted sizes
# must never drive allocation).
DEFAULT_MAX_PAYLOAD_BYTES = 8 << 30

_HEADER_PACK = struct.Struct("<4I")   # version, p, C, N
_HEADER_CLF = struct.Struct("<3I")    # version, C, p


class FormatError(ValueError):
    """Raised for malformed or inconsistent on-disk data."""


class ManifestError(FormatError):
    """Raised for invalid epoch manifests."""


@dataclass(frozen=True)
class ActivationPack:
    """A balanced, class-grouped set of last-layer activations.

    ``data`` has shape ``(C*N, p)``; rows ``[c*N, (c+1)*N)`` belong to class
    ``c``. Balance (exactly N rows per class) is structural.
    """

    feature_dim: int
    num_classes: int
    per_class_count: int
    data: np.ndarray

    def __post_init__(self):
        p, c, n = self.feature_dim, self.num_classes, self.per_class_count
        if p < 1:
            raise ValueError("feature_dim must be >= 1")
        if c < 2:
            raise ValueError("num_classes must be >= 2")
        if n < 1:
            raise ValueError("per_class_count must be >= 1")
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.shape != (c * n, p):
            raise ValueError(
                f"data must have shape ({c * n}, {p}), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("data contains a non-finite value")
        object.__setattr__(self, "data", arr)

    @property
    def labels(self) -> np.ndarray:
        """Class index of every row, shape ``(C*N,)``."""
        return np.repeat(np.arange(self.num_classes), self.per_class_count)

    def class_rows(self, c: int) -> np.ndarray:
        """The ``N`` rows of class ``c`` (a view)."""
        if not 0 <= c < self.num_classes:
            raise IndexError(f"class index {c} out of range")
        n = self.per_class_count
        return self.data[c * n : (c + 1) * n]


@dataclass(frozen=True)
class ClassifierSnapshot:
    """Linear classifier weights ``(C, p)`` and biases ``(C,)``."""

    num_classes: int
    feature_dim: int
    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        c, p = self.num_classes, self.feature_dim
        if c < 2 or p < 1:
            raise ValueError("need num_classes >= 2 and feature_dim >= 1")
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        b = np.ascontiguousarray(self.biases, dtype=np.float64)
        if w.shape != (c, p):
            raise ValueError(f"weights must have shape ({c}, {p}), got {w.shape}")
        if b.shape != (c,):
            raise ValueError(f"biases must have shape ({c},), got {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("classifier contains a non-finite value")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)


def pack_from_arrays(X, y) -> ActivationPack:
    """Build an :class:`ActivationPack` from an ``(n, p)`` array and labels.

    Labels are mapped to contiguous class indices ``0..C-1`` in ascending
    label order; row order inside each class is preserved. Classes must be
    balanced.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    y = check_labels(y)
    check_consistent_length(X, y)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least 2 classes")
    counts = [int(np.sum(y == c)) for c in classes]
    if len(set(counts)) != 1:
        raise ValueError(f"classes must be balanced, got counts {counts}")
    n = counts[0]
    rows = np.concatenate([X[y == c] for c in classes], axis=0)
    return ActivationPack(X.shape[1], classes.size, n, rows)


def _open_sink(destination):
    if hasattr(destination, "write"):
        return destination, False
    return open(destination, "wb"), True


def _open_source(source):
    if hasattr(source, "read"):
        return source, False
    return open(source, "rb"), True


def write_pack(pack: ActivationPack, destination) -> None:
    """Serialize a pack. ``destination`` is a path or a binary file object."""
    arr = np.ascontiguousarray(pack.data, dtype="<f8")
    if not np.all(np.isfinite(arr)):
        # data arrays are mutable; re-check at the boundary
        raise ValueError("refusing to write: data contains a non-finite value")
    f, close = _open_sink(destination)
    try:
        f.write(PACK_MAGIC)
        f.write(
            _HEADER_PACK.pack(
                FORMAT_VERSION,
                pack.feature_dim,
                pack.num_classes,
                pack.per_class_count,
            )
        )
        f.write(arr.tobytes())
    finally:
        if close:
            f.close()


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated {what}: expected {n} bytes, got {len(buf)}")
    return buf


def _check_no_trailing(f) -> None:
    if f.read(1):
        raise FormatError("trailing data after payload")


def read_pack(source, *, max_payload_bytes: int = DEFAULT_MAX_PAYLOAD_BYTES) -> ActivationPack:
    """Parse a pack from a path or binary file object (inverse of write_pack)."""
    f, close = _open_source(source)
    try:
        magic = _read_exact(f, 4, "header")
        if magic != PACK_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {PACK_MAGIC!r}")
        version, p, c, n = _HEADER_PACK.unpack(_read_exact(f, _HEADER_PACK.size, "header"))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported version {version}")
        if p < 1 or c < 2 or n < 1:
            raise FormatError(f"invalid dimensions p={p}, C={c}, N={n}")
        payload_bytes = 8 * p * c * n
        if payload_bytes > max_payload_bytes:
            raise FormatError(
                f"declared payload of {payload_bytes} bytes exceeds the "
                f"{max_payload_bytes}-byte size cap"
            )
        buf = _read_exact(f, payload_bytes, "payload")
        _check_no_trailing(f)
    finally:
        if close:
            f.close()
    data = np.frombuffer(buf, dtype="<f8").astype(np.float64).reshape(c * n, p)
    if not np.all(np.isfinite(data)):
        raise FormatError("payload contains a non-finite value")
    return ActivationPack(p, c, n, data)


def write_classifier(snapshot: ClassifierSnapshot, destination) -> None:
    """Serialize a classifier snapshot."""
    w = np.ascontiguousarray(snapshot.weights, dtype="<f8")
    b = np.ascontiguousarray(snapshot.biases, dtype="<f8")
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
        raise ValueError("refusing to write: classifier contains a non-finite value")
    f, close = _open_sink(destination)
    try:
        f.write(CLASSIFIER_MAGIC)
        f.write(_HEADER_CLF.pack(FORMAT_VERSION, snapshot.num_classes, snapshot.feature_dim))
        f.write(w.tobytes())
        f.write(b.tobytes())
    finally:
        if close:
            f.close()


def read_classifier(
    source,
    *,
    pack: ActivationPack | None = None,
    max_payload_bytes: int = DEFAULT_MAX_PAYLOAD_BYTES,
) -> ClassifierSnapshot:
    """Parse a classifier snapshot; optionally check dimensions against a pack."""
    f, close = _open_source(source)
    try:
        magic = _read_exact(f, 4, "header")
        if magic != CLASSIFIER_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {CLASSIFIER_MAGIC!r}")
        version, c, p = _HEADER_CLF.unpack(_read_exact(f, _HEADER_CLF.size, "header"))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported version {version}")
        if p < 1 or c < 2:
            raise FormatError(f"invalid dimensions C={c}, p={p}")
        payload_bytes = 8 * (c * p + c)
        if payload_bytes > max_payload_bytes:
            raise FormatError(
                f"declared payload of {payload_bytes} bytes exceeds the "
                f"{max_payload_bytes}-byte size cap"
            )
        buf = _read_exact(f, payload_bytes, "payload")
        _check_no_trailing(f)
    finally:
        if close:
            f.close()
    flat = np.frombuffer(buf, dtype="<f8").astype(np.float64)
    if not np.all(np.isfinite(flat)):
        raise FormatError("payload contains a non-finite value")
    snapshot = ClassifierSnapshot(c, p, flat[: c * p].reshape(c, p), flat[c * p :])
    if pack is not None and (snapshot.feature_dim != pack.feature_dim
                             or snapshot.num_classes != pack.num_classes):
        raise FormatError(
            f"dimension mismatch: classifier is C={snapshot.num_classes}, "
            f"p={snapshot.feature_dim} but pack is C={pack.num_classes}, "
            f"p={pack.feature_dim}"
        )
    return snapshot


@dataclass(frozen=True)
class ManifestEntry:
    epoch: int
    pack: Path
    classifier: Path | None = None
    test_pack: Path | None = None


@dataclass
class EpochManifest:
    """Ordered epoch snapshots plus free-form string metadata."""

    entries: list[ManifestEntry]
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        epochs = [e.epoch for e in self.entries]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ManifestError(f"epoch indices must be strictly increasing, got {epochs}")


def write_manifest(manifest: EpochManifest, path) -> None:
    doc = {
        "epochs": [
            {
                "epoch": e.epoch,
                "pack": str(e.pack),
                **({"classifier": str(e.classifier)} if e.classifier else {}),
                **({"test_pack": str(e.test_pack)} if e.test_pack else {}),
            }
            for e in manifest.entries
        ],
        "meta": dict(manifest.meta),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_manifest(path, *, check_files: bool = True) -> EpochManifest:
    """Load a manifest, resolving relative paths against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(doc, dict) or "epochs" not in doc:
        raise ManifestError("manifest must be an object with an 'epochs' list")
    base = path.parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    entries = []
    for row in doc["epochs"]:
        if "epoch" not in row or "pack" not in row:
            raise ManifestError(f"manifest entry missing 'epoch' or 'pack': {row}")
        entries.append(
            ManifestEntry(
                epoch=int(row["epoch"]),
                pack=resolve(row["pack"]),
                classifier=resolve(row["classifier"]) if row.get("classifier") else None,
                test_pack=resolve(row["test_pack"]) if row.get("test_pack") else None,
            )
        )
    meta = {str(k): str(v) for k, v in dict(doc.get("meta", {})).items()}
    manifest = EpochManifest(entries, meta)
    if check_files:
        missing = [
            str(q)
            for e in manifest.entries
            for q in (e.pack, e.classifier, e.test_pack)
            if q is not None and not Path(q).exists()
        ]
        if missing:
            raise ManifestError(f"manifest references missing files: {missing}")
    return manifest
