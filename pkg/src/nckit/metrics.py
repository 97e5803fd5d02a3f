"""Per-epoch collapse metrics for activation packs and classifier snapshots.

Every quantity depends only on inner products, so all metrics are invariant
under a global orthogonal rotation applied jointly to activations and
classifier rows.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .classify import CentroidRule, LinearRule
from .etf import etf_deviation
from .io import ActivationPack, ClassifierSnapshot, EpochManifest, read_classifier, read_pack
from .moments import Moments, compute_moments, pseudo_inverse


@dataclass(frozen=True)
class NcReport:
    """One epoch's worth of collapse metrics.

    Classifier-derived fields are ``None`` when no snapshot was supplied.
    ``probe_source`` records which pack fed the classifier/center-rule
    disagreement ("test" when a held-out pack was available, else "train").
    """

    epoch: int
    nc1_within_over_between: float | None = None
    nc1_trace: float | None = None
    norm_cv_means: float | None = None
    norm_cv_classifier: float | None = None
    angle_std_means: float | None = None
    angle_std_classifier: float | None = None
    max_angle_means: float | None = None
    max_angle_classifier: float | None = None
    duality_gap: float | None = None
    ncc_mismatch: float | None = None
    classifier_present: bool = False
    probe_source: str | None = None
    failed: bool = False
    error: str = ""
    notes: str = ""


REPORT_FIELDS = tuple(f.name for f in fields(NcReport))

METRIC_FIELDS = (
    "nc1_within_over_between",
    "nc1_trace",
    "norm_cv_means",
    "norm_cv_classifier",
    "angle_std_means",
    "angle_std_classifier",
    "max_angle_means",
    "max_angle_classifier",
    "duality_gap",
    "ncc_mismatch",
)


def nc1_trace(m: Moments, rtol: float | None = None) -> float:
    """Trace of ``within_cov @ pinv(between_cov)`` (inverse signal-to-noise)."""
    return float(np.trace(m.within_cov @ pseudo_inverse(m.between_cov, rtol)))


def nc1_collapse(m: Moments, rtol: float | None = None) -> float:
    """``nc1_trace / C``, the per-class within/between variability ratio."""
    return nc1_trace(m, rtol) / m.num_classes


def equinorm_cv(vectors: np.ndarray) -> float:
    """Coefficient of variation of row norms (population std / mean)."""
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] < 2:
        raise ValueError(f"expected (C, p) with C >= 2, got shape {v.shape}")
    norms = np.linalg.norm(v, axis=1)
    mean = norms.mean()
    if mean == 0.0:
        raise ValueError("degenerate: all vectors are zero")
    return float(np.std(norms) / mean)


def equiangularity_std(vectors: np.ndarray) -> float:
    """Std of cosines across distinct pairs of rows."""
    return etf_deviation(np.asarray(vectors, dtype=np.float64).T).cosine_std


def max_equiangularity(vectors: np.ndarray) -> float:
    """Mean ``|cos + 1/(C-1)|`` across distinct pairs of rows."""
    return etf_deviation(np.asarray(vectors, dtype=np.float64).T).max_angle_dev


def duality_gap(m: Moments, clf: ClassifierSnapshot) -> float:
    """Squared Frobenius distance between unit-normalized classifier and
    unit-normalized centered class means."""
    if clf.feature_dim != m.feature_dim or clf.num_classes != m.num_classes:
        raise ValueError("dimension mismatch between classifier and moments")
    w_norm = np.linalg.norm(clf.weights)
    centered = m.centered_means
    m_norm = np.linalg.norm(centered)
    if w_norm == 0.0:
        raise ValueError("degenerate: zero classifier")
    if m_norm == 0.0:
        raise ValueError("degenerate: zero centered means")
    diff = clf.weights.T / w_norm - centered / m_norm
    return float(np.sum(diff * diff))


def ncc_mismatch(clf: ClassifierSnapshot, train_means: np.ndarray, probe: ActivationPack) -> float:
    """Fraction of probe rows where the linear rule and the nearest
    train-class-mean rule disagree. Ties break to the lowest class index in
    both rules."""
    means = np.asarray(train_means, dtype=np.float64)
    if means.ndim != 2:
        raise ValueError(f"train_means must be (C, p), got shape {means.shape}")
    if clf.feature_dim != probe.feature_dim or means.shape[1] != probe.feature_dim:
        raise ValueError("dimension mismatch between classifier, means, and probe")
    if means.shape[0] != clf.num_classes:
        raise ValueError("dimension mismatch: class counts differ")
    linear = LinearRule(clf.weights, clf.biases).predict(probe.data)
    nearest = CentroidRule(means).predict(probe.data)
    return float(np.mean(linear != nearest))


def report_for(
    pack: ActivationPack,
    classifier: ClassifierSnapshot | None = None,
    probe_pack: ActivationPack | None = None,
    *,
    epoch: int = 0,
    rtol: float | None = None,
) -> NcReport:
    """Compute a full report from in-memory values.

    ``probe_pack`` (when given) supplies the activations for the linear-rule
    vs nearest-center disagreement; the class means always come from the
    training ``pack``.
    """
    m = compute_moments(pack)
    notes = []
    if not np.any(m.between_cov):
        notes.append("between-class covariance is zero")
    centered = m.centered_means.T  # (C, p) rows
    values = {
        "nc1_trace": nc1_trace(m, rtol),
        "norm_cv_means": equinorm_cv(centered),
        "angle_std_means": equiangularity_std(centered),
        "max_angle_means": max_equiangularity(centered),
    }
    values["nc1_within_over_between"] = values["nc1_trace"] / m.num_classes
    probe_source = None
    if classifier is not None:
        if (classifier.feature_dim != pack.feature_dim
                or classifier.num_classes != pack.num_classes):
            raise ValueError("dimension mismatch between classifier and pack")
        probe = probe_pack if probe_pack is not None else pack
        probe_source = "test" if probe_pack is not None else "train"
        values.update(
            norm_cv_classifier=equinorm_cv(classifier.weights),
            angle_std_classifier=equiangularity_std(classifier.weights),
            max_angle_classifier=max_equiangularity(classifier.weights),
            duality_gap=duality_gap(m, classifier),
            ncc_mismatch=ncc_mismatch(classifier, m.class_means, probe),
        )
    return NcReport(
        epoch=epoch,
        classifier_present=classifier is not None,
        probe_source=probe_source,
        notes="; ".join(notes),
        **values,
    )


def _report_one(entry, expected_dims, rtol, probe_preference):
    pack = read_pack(entry.pack)
    if expected_dims is not None and (pack.feature_dim, pack.num_classes) != expected_dims:
        raise ValueError(
            f"dimension mismatch: epoch {entry.epoch} pack is "
            f"p={pack.feature_dim}, C={pack.num_classes}, expected "
            f"p={expected_dims[0]}, C={expected_dims[1]}"
        )
    classifier = None
    if entry.classifier is not None:
        classifier = read_classifier(entry.classifier, pack=pack)
    probe = None
    if probe_preference == "test" and entry.test_pack is not None:
        probe = read_pack(entry.test_pack)
        if (probe.feature_dim, probe.num_classes) != (pack.feature_dim, pack.num_classes):
            raise ValueError("dimension mismatch: test pack does not match train pack")
    return report_for(pack, classifier, probe, epoch=entry.epoch, rtol=rtol)


def trajectory_report(
    manifest: EpochManifest,
    *,
    rtol: float | None = None,
    probe_preference: str = "test",
    max_workers: int = 1,
) -> list[NcReport]:
    """One report per manifest epoch, ordered by epoch.

    Per-epoch failures (corrupt files, dimension drift) are recorded on the
    report rather than aborting the sweep. Dimensions are pinned by the
    first epoch that loads successfully.
    """
    if probe_preference not in ("train", "test"):
        raise ValueError("probe_preference must be 'train' or 'test'")
    entries = list(manifest.entries)
    expected_dims = None
    for entry in entries:
        try:
            first = read_pack(entry.pack)
        except Exception:
            continue
        expected_dims = (first.feature_dim, first.num_classes)
        break

    def run(entry):
        try:
            return _report_one(entry, expected_dims, rtol, probe_preference)
        except Exception as exc:
            return NcReport(epoch=entry.epoch, failed=True, error=str(exc))

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            reports = list(pool.map(run, entries))
    else:
        reports = [run(e) for e in entries]
    return sorted(reports, key=lambda r: r.epoch)
