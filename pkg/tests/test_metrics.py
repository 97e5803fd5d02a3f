import numpy as np
import pytest

from nckit.classify import webb_lowe
from nckit.etf import random_pose, standard_etf
from nckit.io import ActivationPack, ClassifierSnapshot
from nckit.metrics import (
    METRIC_FIELDS,
    duality_gap,
    equiangularity_std,
    equinorm_cv,
    max_equiangularity,
    nc1_collapse,
    nc1_trace,
    ncc_mismatch,
    report_for,
    trajectory_report,
)
from nckit.moments import Moments, compute_moments
from nckit.synth import SynthConfig, generate


def etf_pack(rng, p=12, c=4, n=6, noise=0.0, alpha=1.0):
    pose = random_pose(p, c, rng)
    mu_g = rng.standard_normal(p)
    means = mu_g + alpha * (pose @ standard_etf(c)).T
    rows = np.repeat(means, n, axis=0) + noise * rng.standard_normal((c * n, p))
    return ActivationPack(p, c, n, rows)


class TestNc1:
    def test_scalar_example(self):
        m = Moments(
            np.array([3.0]), np.array([[1.0], [5.0]]),
            np.array([[5.0]]), np.array([[4.0]]), np.array([[1.0]]),
        )
        assert nc1_collapse(m) == pytest.approx(0.125, abs=1e-15)
        assert nc1_trace(m) == pytest.approx(0.25, abs=1e-15)

    def test_collapsed_pack_is_zero(self):
        rng = np.random.default_rng(0)
        m = compute_moments(etf_pack(rng))
        assert nc1_collapse(m) <= 1e-12

    def test_decreases_with_noise(self):
        rng = np.random.default_rng(1)
        values = []
        for noise in (0.5, 0.25, 0.1, 0.02):
            m = compute_moments(etf_pack(np.random.default_rng(1), n=64, noise=noise))
            values.append(nc1_collapse(m))
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_invariant_to_uniform_rescale(self):
        rng = np.random.default_rng(2)
        pack = etf_pack(rng, noise=0.3)
        m1 = compute_moments(pack)
        m2 = compute_moments(
            ActivationPack(pack.feature_dim, pack.num_classes, pack.per_class_count,
                           7.5 * pack.data)
        )
        assert nc1_collapse(m1) == pytest.approx(nc1_collapse(m2), abs=1e-9)


class TestEquinorm:
    def test_equal_norms(self):
        v = np.array([[3.0, 0.0], [0.0, 3.0], [-3.0, 0.0]])
        assert equinorm_cv(v) == 0.0

    def test_known_value(self):
        # norms 1 and 3: population std 1, mean 2
        v = np.array([[1.0, 0.0], [0.0, 3.0]])
        assert equinorm_cv(v) == pytest.approx(0.5, abs=1e-15)

    def test_etf_columns(self):
        assert equinorm_cv(standard_etf(5).T) <= 1e-12

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            equinorm_cv(np.zeros((3, 2)))


class TestAngles:
    def test_delegates_to_deviation(self):
        rows = np.eye(4)
        assert equiangularity_std(rows) == pytest.approx(0.0, abs=1e-15)
        assert max_equiangularity(rows) == pytest.approx(1.0 / 3.0, abs=1e-15)


class TestDualityGap:
    def _moments(self, rng, p=8, c=3):
        return compute_moments(etf_pack(rng, p=p, c=c, noise=0.1))

    def test_exact_self_duality(self):
        rng = np.random.default_rng(3)
        m = self._moments(rng)
        clf = ClassifierSnapshot(3, 8, m.centered_means.T, np.zeros(3))
        assert duality_gap(m, clf) <= 1e-28

    def test_scale_invariance(self):
        rng = np.random.default_rng(4)
        m = self._moments(rng)
        clf = ClassifierSnapshot(3, 8, 7.0 * m.centered_means.T, np.zeros(3))
        assert duality_gap(m, clf) <= 1e-28

    def test_orthogonal_matrices_gap_two(self):
        # unit-Frobenius with zero inner product: ||a - b||^2 = 2
        m = Moments(
            np.zeros(2), np.array([[1.0, 0.0], [-1.0, 0.0]]),
            np.eye(2), np.eye(2), np.zeros((2, 2)),
        )
        clf = ClassifierSnapshot(2, 2, np.array([[0.0, 1.0], [0.0, -1.0]]), np.zeros(2))
        assert duality_gap(m, clf) == pytest.approx(2.0, abs=1e-12)

    def test_range(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            m = self._moments(rng)
            clf = ClassifierSnapshot(3, 8, rng.standard_normal((3, 8)), rng.standard_normal(3))
            assert 0.0 <= duality_gap(m, clf) <= 4.0

    def test_zero_weights_rejected(self):
        rng = np.random.default_rng(6)
        m = self._moments(rng)
        clf = ClassifierSnapshot(3, 8, np.zeros((3, 8)), np.zeros(3))
        with pytest.raises(ValueError, match="zero classifier"):
            duality_gap(m, clf)


class TestNccMismatch:
    def test_lda_on_collapsed_pack_agrees(self):
        rng = np.random.default_rng(7)
        pack = etf_pack(rng, p=16, c=5, n=8)
        m = compute_moments(pack)
        clf = webb_lowe(m)
        assert ncc_mismatch(clf, m.class_means, pack) == 0.0

    def test_constant_rule_counts_non_favorites(self):
        # W = 0, b = one-hot(0): linear rule always answers class 0, so the
        # mismatch is the fraction of probes not nearest to mean 0
        means = np.array([[0.0, 0.0], [2.0, 0.0]])
        clf = ClassifierSnapshot(2, 2, np.zeros((2, 2)), np.array([1.0, 0.0]))
        probe = ActivationPack(
            2, 2, 2, np.array([[0.1, 0.0], [0.4, 0.0], [1.6, 0.0], [1.9, 0.5]])
        )
        # nearest means: 0, 0, 1, 1 -> two of four differ from constant 0
        assert ncc_mismatch(clf, means, probe) == 0.5

    def test_means_as_probes_agree(self):
        rng = np.random.default_rng(8)
        pack = etf_pack(rng, p=10, c=4, n=3)
        m = compute_moments(pack)
        clf = webb_lowe(m)
        probe = ActivationPack(10, 2, 2, m.class_means)
        assert ncc_mismatch(clf, m.class_means, probe) == 0.0

    def test_dimension_mismatch(self):
        clf = ClassifierSnapshot(2, 3, np.zeros((2, 3)), np.zeros(2))
        probe = ActivationPack(2, 2, 1, np.zeros((2, 2)))
        with pytest.raises(ValueError, match="dimension mismatch"):
            ncc_mismatch(clf, np.zeros((2, 3)), probe)


class TestReportInvariances:
    def test_rotation_invariance(self):
        rng = np.random.default_rng(9)
        pack = etf_pack(rng, p=9, c=3, n=5, noise=0.2)
        w = rng.standard_normal((3, 9))
        b = rng.standard_normal(3)
        clf = ClassifierSnapshot(3, 9, w, b)
        r1 = report_for(pack, clf)
        q = random_pose(9, 9, rng)
        rotated_pack = ActivationPack(9, 3, 5, pack.data @ q.T)
        rotated_clf = ClassifierSnapshot(3, 9, w @ q.T, b)
        r2 = report_for(rotated_pack, rotated_clf)
        for name in METRIC_FIELDS:
            assert abs(getattr(r1, name) - getattr(r2, name)) < 1e-9, name

    def test_full_collapse_end_state(self):
        rng = np.random.default_rng(10)
        pack = etf_pack(rng, p=12, c=4, n=4)
        m = compute_moments(pack)
        mu_g = m.global_mean
        w = m.centered_means.T
        clf = ClassifierSnapshot(4, 12, w, np.full(4, 0.25) - w @ mu_g)
        report = report_for(pack, clf)
        for name in METRIC_FIELDS:
            assert abs(getattr(report, name)) < 1e-9, name

    def test_no_classifier_fields_absent(self):
        rng = np.random.default_rng(11)
        report = report_for(etf_pack(rng, noise=0.1))
        assert not report.classifier_present
        assert report.duality_gap is None
        assert report.ncc_mismatch is None
        assert report.norm_cv_classifier is None
        assert report.probe_source is None
        assert report.norm_cv_means is not None


class TestTrajectory:
    def test_synth_trajectory_nc1_decreasing(self, tmp_path):
        config = SynthConfig(
            feature_dim=12, num_classes=4, per_class_count=32, epochs=10,
            mean_trajectory="drift_to_etf", seed=21,
        )
        manifest = generate(config, tmp_path)
        reports = trajectory_report(manifest)
        assert [r.epoch for r in reports] == list(range(10))
        nc1 = [r.nc1_within_over_between for r in reports]
        assert all(b < a for a, b in zip(nc1, nc1[1:]))
        assert all(r.classifier_present for r in reports)
        assert all(r.probe_source == "train" for r in reports)

    def test_parallel_matches_serial(self, tmp_path):
        config = SynthConfig(
            feature_dim=8, num_classes=3, per_class_count=8, epochs=6, seed=4
        )
        manifest = generate(config, tmp_path)
        serial = trajectory_report(manifest, max_workers=1)
        parallel = trajectory_report(manifest, max_workers=4)
        assert serial == parallel

    def test_mismatched_dims_marked_failed(self, tmp_path):
        from nckit.io import EpochManifest, ManifestEntry, write_manifest, write_pack

        rng = np.random.default_rng(12)
        write_pack(ActivationPack(3, 2, 2, rng.standard_normal((4, 3))), tmp_path / "a.ncap")
        write_pack(ActivationPack(4, 2, 2, rng.standard_normal((4, 4))), tmp_path / "b.ncap")
        write_manifest(
            EpochManifest([ManifestEntry(0, "a.ncap"), ManifestEntry(1, "b.ncap")]),
            tmp_path / "m.json",
        )
        from nckit.io import read_manifest

        reports = trajectory_report(read_manifest(tmp_path / "m.json"))
        assert not reports[0].failed
        assert reports[1].failed
        assert "dimension mismatch" in reports[1].error

    def test_corrupt_pack_marked_failed_not_fatal(self, tmp_path):
        from nckit.io import EpochManifest, ManifestEntry, write_manifest, write_pack

        rng = np.random.default_rng(13)
        write_pack(ActivationPack(3, 2, 2, rng.standard_normal((4, 3))), tmp_path / "a.ncap")
        (tmp_path / "bad.ncap").write_bytes(b"XXXX" + b"\x00" * 30)
        write_manifest(
            EpochManifest([ManifestEntry(0, "a.ncap"), ManifestEntry(1, "bad.ncap")]),
            tmp_path / "m.json",
        )
        from nckit.io import read_manifest

        reports = trajectory_report(read_manifest(tmp_path / "m.json"))
        assert [r.failed for r in reports] == [False, True]
        assert "bad magic" in reports[1].error

    def test_test_pack_preferred_and_labelled(self, tmp_path):
        from nckit.io import EpochManifest, ManifestEntry, write_manifest, write_pack

        rng = np.random.default_rng(14)
        pack = etf_pack(rng, p=6, c=3, n=4, noise=0.05)
        test = etf_pack(np.random.default_rng(14), p=6, c=3, n=2, noise=0.05)
        write_pack(pack, tmp_path / "train.ncap")
        write_pack(test, tmp_path / "test.ncap")
        m = compute_moments(pack)
        clf = webb_lowe(m)
        from nckit.io import write_classifier

        write_classifier(clf, tmp_path / "c.nclf")
        write_manifest(
            EpochManifest(
                [ManifestEntry(0, "train.ncap", classifier="c.nclf", test_pack="test.ncap")]
            ),
            tmp_path / "m.json",
        )
        from nckit.io import read_manifest

        manifest = read_manifest(tmp_path / "m.json")
        with_test = trajectory_report(manifest, probe_preference="test")
        train_only = trajectory_report(manifest, probe_preference="train")
        assert with_test[0].probe_source == "test"
        assert train_only[0].probe_source == "train"
