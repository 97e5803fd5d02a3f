import numpy as np
import pytest

from nckit.metrics import METRIC_FIELDS, trajectory_report
from nckit.moments import compute_moments
from nckit.io import read_pack
from nckit.synth import SynthConfig, generate, geometric_schedule


class TestConfig:
    def test_schedule_length_must_match(self):
        with pytest.raises(ValueError, match="length"):
            SynthConfig(4, 2, 2, epochs=3, noise_schedule=(1.0, 0.5))

    def test_negative_noise_rejected(self):
        with pytest.raises(ValueError, match=">= 0"):
            SynthConfig(4, 2, 2, epochs=2, noise_schedule=(1.0, -0.5))

    def test_interpolation_must_be_nondecreasing(self):
        with pytest.raises(ValueError, match="nondecreasing"):
            SynthConfig(4, 2, 2, epochs=2, interpolation=(0.5, 0.2))

    def test_unknown_trajectory_rejected(self):
        with pytest.raises(ValueError, match="mean_trajectory"):
            SynthConfig(4, 2, 2, epochs=1, mean_trajectory="spiral")

    def test_default_schedule_is_geometric(self):
        sched = geometric_schedule(10)
        assert sched[0] == pytest.approx(1.0)
        assert sched[-1] == pytest.approx(1e-3)
        ratios = [b / a for a, b in zip(sched, sched[1:])]
        assert np.allclose(ratios, ratios[0])


class TestGenerate:
    def test_same_seed_byte_identical(self, tmp_path):
        config = SynthConfig(8, 3, 4, epochs=3, seed=77)
        generate(config, tmp_path / "a")
        generate(config, tmp_path / "b")
        for name in sorted(q.name for q in (tmp_path / "a").iterdir()):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_different_seed_differs(self, tmp_path):
        generate(SynthConfig(8, 3, 4, epochs=1, seed=1), tmp_path / "a")
        generate(SynthConfig(8, 3, 4, epochs=1, seed=2), tmp_path / "b")
        assert (tmp_path / "a" / "epoch_000.ncap").read_bytes() != (
            tmp_path / "b" / "epoch_000.ncap"
        ).read_bytes()

    def test_zero_noise_fixed_etf_is_exact_end_state(self, tmp_path):
        config = SynthConfig(
            10, 4, 4, epochs=2, noise_schedule=(0.0, 0.0), mean_trajectory="fixed_etf", seed=5
        )
        manifest = generate(config, tmp_path)
        for report in trajectory_report(manifest):
            for name in METRIC_FIELDS:
                assert abs(getattr(report, name)) < 1e-9, name

    def test_within_cov_tracks_squared_noise_ratio(self, tmp_path):
        config = SynthConfig(
            8, 3, 64, epochs=3, noise_schedule=(0.5, 0.25, 0.125), seed=13
        )
        manifest = generate(config, tmp_path)
        norms = []
        for entry in manifest.entries:
            m = compute_moments(read_pack(entry.pack))
            norms.append(np.linalg.norm(m.within_cov))
        for (s_now, s_next), (f_now, f_next) in zip(
            [(0.5, 0.25), (0.25, 0.125)], zip(norms, norms[1:])
        ):
            expected = (s_next / s_now) ** 2
            assert f_next / f_now == pytest.approx(expected, rel=0.2)

    def test_drift_final_epoch_self_dual(self, tmp_path):
        config = SynthConfig(
            8, 3, 16, epochs=5, mean_trajectory="drift_to_etf", seed=2
        )
        manifest = generate(config, tmp_path)
        reports = trajectory_report(manifest)
        assert reports[-1].duality_gap < 1e-9

    @pytest.mark.parametrize("s_final", [1e-2, 1e-3])
    def test_final_epoch_fields_scale_with_noise(self, tmp_path, s_final):
        config = SynthConfig(
            12, 4, 64, epochs=4,
            noise_schedule=(0.5, 0.1, 2 * s_final, s_final),
            mean_trajectory="drift_to_etf", seed=31,
        )
        manifest = generate(config, tmp_path)
        final = trajectory_report(manifest)[-1]
        for name in METRIC_FIELDS:
            assert abs(getattr(final, name)) < 10.0 * s_final, name

    def test_pack_layout(self, tmp_path):
        config = SynthConfig(6, 2, 3, epochs=1, seed=0)
        manifest = generate(config, tmp_path)
        pack = read_pack(manifest.entries[0].pack)
        assert pack.feature_dim == 6
        assert pack.num_classes == 2
        assert pack.per_class_count == 3
        assert manifest.meta["generator"] == "synth"
