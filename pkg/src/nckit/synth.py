"""Synthetic activation trajectories with controllable collapse.

Generates epoch-by-epoch activation packs whose class means sit at (or
drift toward) simplex-ETF vertices around a fixed nonzero global mean, with
isotropic Gaussian within-class noise shrinking along a schedule. The
classifier snapshot interpolates between a fixed random matrix and the
transpose of the pack's own empirical centered means, so a fully
interpolated epoch is exactly self-dual and center-rule consistent.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .etf import random_pose, standard_etf
from .io import (
    ActivationPack,
    ClassifierSnapshot,
    EpochManifest,
    ManifestEntry,
    read_manifest,
    write_classifier,
    write_manifest,
    write_pack,
)

MEAN_TRAJECTORIES = ("fixed_etf", "drift_to_etf")


def geometric_schedule(epochs: int, start: float = 1.0, end: float = 1e-3) -> tuple[float, ...]:
    if epochs == 1:
        return (end,)
    ratio = (end / start) ** (1.0 / (epochs - 1))
    return tuple(start * ratio**e for e in range(epochs))


@dataclass(frozen=True)
class SynthConfig:
    feature_dim: int
    num_classes: int
    per_class_count: int
    epochs: int
    noise_schedule: tuple[float, ...] | None = None
    mean_trajectory: str = "fixed_etf"
    interpolation: tuple[float, ...] | None = None
    scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.feature_dim < self.num_classes:
            raise ValueError("feature_dim must be >= num_classes")
        if self.per_class_count < 1:
            raise ValueError("per_class_count must be >= 1")
        if self.mean_trajectory not in MEAN_TRAJECTORIES:
            raise ValueError(f"mean_trajectory must be one of {MEAN_TRAJECTORIES}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.noise_schedule is not None:
            sched = tuple(float(s) for s in self.noise_schedule)
            if len(sched) != self.epochs:
                raise ValueError("noise_schedule length must equal epochs")
            if any(s < 0 for s in sched):
                raise ValueError("noise scales must be >= 0")
            object.__setattr__(self, "noise_schedule", sched)
        if self.interpolation is not None:
            interp = tuple(float(t) for t in self.interpolation)
            if len(interp) != self.epochs:
                raise ValueError("interpolation length must equal epochs")
            if any(t < 0 or t > 1 for t in interp):
                raise ValueError("interpolation values must lie in [0, 1]")
            if any(b < a for a, b in zip(interp, interp[1:])):
                raise ValueError("interpolation must be nondecreasing")
            object.__setattr__(self, "interpolation", interp)

    def resolved_noise(self) -> tuple[float, ...]:
        if self.noise_schedule is not None:
            return self.noise_schedule
        return geometric_schedule(self.epochs)

    def resolved_interpolation(self) -> tuple[float, ...]:
        if self.interpolation is not None:
            return self.interpolation
        if self.mean_trajectory == "fixed_etf":
            return (1.0,) * self.epochs
        if self.epochs == 1:
            return (1.0,)
        return tuple(e / (self.epochs - 1) for e in range(self.epochs))


def generate(config: SynthConfig, out_dir) -> EpochManifest:
    """Write packs, classifier snapshots, and a manifest; return the manifest.

    Deterministic given the config seed: epoch noise streams are derived
    children of the root seed, so packs are byte-identical across runs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p, c, n = config.feature_dim, config.num_classes, config.per_class_count
    noise = config.resolved_noise()
    interp = config.resolved_interpolation()

    root = np.random.SeedSequence(config.seed)
    pose_ss, start_ss, clf_ss, epochs_ss = root.spawn(4)
    pose = random_pose(p, c, np.random.default_rng(pose_ss))
    target = config.scale * (pose @ standard_etf(c))  # (p, C)

    start_rng = np.random.default_rng(start_ss)
    start = start_rng.standard_normal((p, c))
    start -= start.mean(axis=1, keepdims=True)
    start *= config.scale / np.linalg.norm(start, axis=0).mean()

    clf_rng = np.random.default_rng(clf_ss)
    rand_w = clf_rng.standard_normal((c, p))
    rand_b = clf_rng.standard_normal(c)

    global_mean = np.ones(p) / np.sqrt(p)

    entries = []
    epoch_seeds = epochs_ss.spawn(config.epochs)
    for e in range(config.epochs):
        t = interp[e]
        if config.mean_trajectory == "fixed_etf":
            means = target
        else:
            means = (1.0 - t) * start + t * target
        rng = np.random.default_rng(epoch_seeds[e])
        eps = rng.standard_normal((c, n, p))
        rows = (global_mean + means.T[:, None, :] + noise[e] * eps).reshape(c * n, p)
        pack = ActivationPack(p, c, n, rows)

        emp_means = rows.reshape(c, n, p).mean(axis=1)
        emp_global = rows.mean(axis=0)
        emp_centered = (emp_means - emp_global).T  # (p, C)
        dual_w = emp_centered.T
        dual_b = np.full(c, 1.0 / c) - dual_w @ emp_global
        snapshot = ClassifierSnapshot(
            c, p, (1.0 - t) * rand_w + t * dual_w, (1.0 - t) * rand_b + t * dual_b
        )

        pack_name = f"epoch_{e:03d}.ncap"
        clf_name = f"epoch_{e:03d}.nclf"
        write_pack(pack, out / pack_name)
        write_classifier(snapshot, out / clf_name)
        entries.append(ManifestEntry(epoch=e, pack=Path(pack_name), classifier=Path(clf_name)))

    manifest = EpochManifest(
        entries,
        meta={
            "generator": "synth",
            "mean_trajectory": config.mean_trajectory,
            "noise_schedule": ",".join(f"{s:.17g}" for s in noise),
            "interpolation": ",".join(f"{t:.17g}" for t in interp),
            "scale": f"{config.scale:.17g}",
            "seed": str(config.seed),
        },
    )
    write_manifest(manifest, out / "manifest.json")
    # re-read so entry paths resolve against the output directory
    return read_manifest(out / "manifest.json")
