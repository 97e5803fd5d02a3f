"""Codebook + white-Gaussian channel + linear decoder.

A codeword ``mu_c`` (column of the codebook) is transmitted, the receiver
sees ``h = mu_c + z`` with ``z ~ N(0, sigma^2 I)``, and decodes with
``argmax_c <w_c, h> + b_c``. The small-noise misclassification probability
decays like ``exp(-beta / sigma^2)``; ``beta`` is computed in closed form
(the squared distance from each codeword to the nearest decision boundary,
halved) and estimated by Monte Carlo at finite noise.

The ambient dimension is pinned to the class count: codebooks living in a
larger space must be rotated into the span of their codewords first.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import erfc, ndtri

from .etf import standard_etf

# Each trial consumes a fixed number of uniforms, padded to the 4-draw
# Philox counter block, so trial t's noise is a pure function of
# (seed, t) no matter how trials are batched.
_PHILOX_BLOCK = 4


@dataclass(frozen=True)
class CodecInstance:
    """Codebook columns (norm <= 1), linear decoder rows, bias, noise level."""

    codebook: np.ndarray  # (C, C), columns are codewords
    decoder: np.ndarray   # (C, C), rows score the classes
    bias: np.ndarray      # (C,)
    noise: float

    def __post_init__(self):
        m = np.ascontiguousarray(self.codebook, dtype=np.float64)
        w = np.ascontiguousarray(self.decoder, dtype=np.float64)
        b = np.ascontiguousarray(self.bias, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"codebook must be square (C, C), got {m.shape}")
        c = m.shape[0]
        if c < 2:
            raise ValueError("need at least 2 codewords")
        if w.shape != (c, c) or b.shape != (c,):
            raise ValueError("decoder must be (C, C) and bias (C,)")
        if not all(np.all(np.isfinite(x)) for x in (m, w, b)):
            raise ValueError("codec contains a non-finite value")
        norms = np.linalg.norm(m, axis=0)
        if np.any(norms > 1.0 + 1e-10):
            raise ValueError(f"codeword norms must be <= 1, got max {norms.max():.12g}")
        if not self.noise > 0:
            raise ValueError("noise must be positive")
        object.__setattr__(self, "codebook", m)
        object.__setattr__(self, "decoder", w)
        object.__setattr__(self, "bias", b)

    @property
    def num_classes(self) -> int:
        return self.codebook.shape[0]


def etf_codec(num_classes: int, noise: float) -> CodecInstance:
    """The optimal instance: standard simplex ETF codebook decoded by itself."""
    m = standard_etf(num_classes)
    return CodecInstance(m, m.copy(), np.zeros(num_classes), noise)


@dataclass(frozen=True)
class ExponentReport:
    """Closed-form error exponents.

    ``beta_pairwise[c, c']`` is the exponent of the event "class c scored at
    or below class c'" (diagonal is NaN); ``beta_per_class`` minimizes over
    rivals and ``beta`` over classes.
    """

    beta_pairwise: np.ndarray
    beta_per_class: np.ndarray
    beta: float


def analytic_exponent(instance: CodecInstance) -> ExponentReport:
    """Exact exponents from point-to-halfspace distances.

    For rival ``c'``, the noise vectors flipping the comparison form the
    halfspace ``<w_c - w_c', z> <= -margin`` with
    ``margin = <w_c - w_c', mu_c> + b_c - b_c'``; the exponent is half the
    squared distance from the origin, ``0.5 * (max(0, margin)/||u||)^2``.
    Coinciding decoder rows give exponent 0 when the bias does not already
    rank c first, and an unreachable event (+inf) when it does.
    """
    m, w, b = instance.codebook, instance.decoder, instance.bias
    c = instance.num_classes
    beta_pairwise = np.full((c, c), np.nan)
    for i in range(c):
        for j in range(c):
            if i == j:
                continue
            u = w[i] - w[j]
            margin = float(u @ m[:, i]) + b[i] - b[j]
            norm = float(np.linalg.norm(u))
            if norm == 0.0:
                beta_pairwise[i, j] = np.inf if margin > 0 else 0.0
            else:
                dist = max(0.0, margin) / norm
                beta_pairwise[i, j] = 0.5 * dist * dist
    beta_per_class = np.nanmin(beta_pairwise, axis=1)
    return ExponentReport(beta_pairwise, beta_per_class, float(np.min(beta_per_class)))


class ErrorEstimate(NamedTuple):
    error_rate: float
    ci_halfwidth: float
    num_errors: int
    num_trials: int


def _class_of_trial(start: int, stop: int, boundaries: np.ndarray) -> np.ndarray:
    idx = np.arange(start, stop)
    return np.searchsorted(boundaries, idx, side="right")


def simulate_error_rate(
    instance: CodecInstance,
    trials: int,
    seed: int,
    *,
    block_trials: int = 1 << 16,
) -> ErrorEstimate:
    """Monte Carlo misclassification rate with a 95% binomial CI halfwidth.

    Trials are split as evenly as possible across classes in class-major
    order (matching a uniform class draw in expectation with lower
    variance). Noise for trial ``t`` comes from a Philox stream advanced to
    a fixed per-trial counter offset, so the estimate is bit-reproducible
    for a given ``(seed, trials)`` regardless of block size or scheduling.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    c = instance.num_classes
    sigma = instance.noise
    counts = np.full(c, trials // c)
    counts[: trials % c] += 1
    boundaries = np.cumsum(counts)

    uniforms_per_trial = -(-c // _PHILOX_BLOCK) * _PHILOX_BLOCK
    blocks_per_trial = uniforms_per_trial // _PHILOX_BLOCK

    errors = 0
    for start in range(0, trials, block_trials):
        stop = min(start + block_trials, trials)
        n = stop - start
        bitgen = np.random.Philox(key=seed)
        bitgen.advance(start * blocks_per_trial)
        u = np.random.Generator(bitgen).random((n, uniforms_per_trial))[:, :c]
        z = ndtri(u + 2.0**-54) * sigma
        cls = _class_of_trial(start, stop, boundaries)
        h = instance.codebook[:, cls].T + z
        scores = h @ instance.decoder.T + instance.bias
        errors += int(np.sum(np.argmax(scores, axis=1) != cls))

    rate = errors / trials
    half = 1.96 * math.sqrt(rate * (1.0 - rate) / trials)
    return ErrorEstimate(rate, half, errors, trials)


class ExponentPoint(NamedTuple):
    sigma: float
    error_rate: float
    ci_halfwidth: float
    exponent: float  # NaN when unusable (no observed errors)
    usable: bool


def exponent_estimate(
    instance: CodecInstance,
    sigmas,
    trials: int,
    seed: int = 0,
) -> list[ExponentPoint]:
    """Empirical exponent sequence ``-sigma^2 * log(error_rate)``.

    ``sigmas`` must be decreasing; entries with zero observed errors are
    marked unusable instead of producing infinities. The sequence
    approaches the analytic exponent from above as the noise shrinks.
    """
    sig = [float(s) for s in sigmas]
    if not sig:
        raise ValueError("need at least one noise level")
    if any(b >= a for a, b in zip(sig, sig[1:])):
        raise ValueError("noise levels must be strictly decreasing")
    if any(s <= 0 for s in sig):
        raise ValueError("noise levels must be positive")
    points = []
    for s in sig:
        inst = dataclasses.replace(instance, noise=s)
        est = simulate_error_rate(inst, trials, seed)
        if est.num_errors == 0:
            points.append(ExponentPoint(s, 0.0, est.ci_halfwidth, float("nan"), False))
        else:
            points.append(
                ExponentPoint(
                    s, est.error_rate, est.ci_halfwidth,
                    -s * s * math.log(est.error_rate), True,
                )
            )
    return points


def q_function(x) -> np.ndarray | float:
    """Standard normal upper-tail probability via the complementary error
    function (relative accuracy ~1e-14 for |x| <= 30)."""
    return 0.5 * erfc(np.asarray(x) / math.sqrt(2.0))
