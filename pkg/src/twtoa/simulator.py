"""Seedable generation of TW-TOA measurement batches.

Randomness comes from numpy's PCG64 bit generator. Per-trial streams are
derived from a master seed with ``SeedSequence(master_seed, spawn_key=(trial,))``
so each trial is reproducible on its own, independent of scheduling.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import MeasurementBatch, NetworkScenario, predict_all


@dataclass(frozen=True)
class NlosConfig:
    """Per-measurement NLOS contamination: with ``probability`` add U[0, bias_max] seconds to z."""

    probability: float
    bias_max: float

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("NLOS probability must lie in [0, 1]")
        if not self.bias_max >= 0:
            raise ValueError("NLOS bias_max must be non-negative")

    @classmethod
    def from_meters(cls, probability, bias_max_m, c):
        return cls(probability, bias_max_m / c)


@dataclass(frozen=True)
class SimConfig:
    """Simulation knobs.

    ``noise_scale`` multiplies the scenario's sigma/gamma when drawing noise
    (0 gives exact measurements while estimators still see the nominal
    noise levels). ``anchor_skew`` lets reference clocks drift from 1 to
    study model mismatch; it only affects the turn-around estimates.
    """

    seed: int = 0
    nlos: NlosConfig | None = None
    noise_scale: float = 1.0
    anchor_skew: tuple | None = None


def make_rng(seed, *spawn_key):
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in spawn_key)))
    )


def contaminate(batch: MeasurementBatch, nlos: NlosConfig, rng) -> MeasurementBatch:
    """Add nonnegative uniform NLOS biases to z; turn-around estimates are untouched."""
    flips = rng.random(batch.z.shape) < nlos.probability
    bias = rng.uniform(0.0, nlos.bias_max, size=batch.z.shape)
    z = batch.z + np.where(flips, bias, 0.0)
    return MeasurementBatch(z, batch.t_hat, batch.nlos | (flips & (bias > 0)))


def simulate(scenario: NetworkScenario, cfg: SimConfig = SimConfig(), rng=None) -> MeasurementBatch:
    if rng is None:
        rng = make_rng(cfg.seed)
    k, n = scenario.rounds, scenario.n_anchors
    mean = predict_all(scenario)
    noise = rng.standard_normal((k, n)) * (scenario.sigma * cfg.noise_scale)
    eps = rng.standard_normal((k, n)) * (scenario.gamma * cfg.noise_scale)
    z = np.broadcast_to(mean, (k, n)) + noise / 2.0
    anchor_skew = np.ones(n) if cfg.anchor_skew is None else np.asarray(cfg.anchor_skew, float)
    t_hat = np.broadcast_to(anchor_skew * scenario.turnaround, (k, n)) + eps
    batch = MeasurementBatch(z, t_hat)
    if cfg.nlos is not None:
        batch = contaminate(batch, cfg.nlos, rng)
    return batch


CSV_HEADER = ("k", "i", "z_seconds", "t_hat_seconds", "nlos_flag")


def write_batch_csv(batch: MeasurementBatch, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for k in range(batch.rounds):
            for i in range(batch.n_anchors):
                w.writerow((k, i, repr(float(batch.z[k, i])), repr(float(batch.t_hat[k, i])),
                            int(batch.nlos[k, i])))


def read_batch_csv(path) -> MeasurementBatch:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty batch file")
    k = max(int(r["k"]) for r in rows) + 1
    n = max(int(r["i"]) for r in rows) + 1
    z = np.full((k, n), np.nan)
    t = np.full((k, n), np.nan)
    nlos = np.zeros((k, n), bool)
    for r in rows:
        kk, ii = int(r["k"]), int(r["i"])
        z[kk, ii] = float(r["z_seconds"])
        t[kk, ii] = float(r["t_hat_seconds"])
        nlos[kk, ii] = bool(int(r.get("nlos_flag", 0) or 0))
    return MeasurementBatch(z, t, nlos)
