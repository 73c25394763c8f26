"""Domain types and the exact TW-TOA measurement equations.

Internal units are seconds and meters. Estimators that need well-scaled
arithmetic convert times to meters by multiplying with ``c`` and then
normalise lengths; see :class:`UnitScale`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 3e8


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ClockModel:
    """Affine target clock g(t) = skew * t + offset."""

    skew: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.skew) and self.skew > 0):
            raise ValueError(f"clock skew must be positive, got {self.skew}")
        if not np.isfinite(self.offset):
            raise ValueError("clock offset must be finite")

    def __call__(self, t):
        return self.skew * t + self.offset


@dataclass(frozen=True)
class NetworkScenario:
    """Anchors, target ground truth, clocks and noise levels of one network.

    ``sigma`` is the standard deviation of the round-trip error n (so z
    carries n/2) and ``gamma`` that of the turn-around estimate error.
    """

    anchors: np.ndarray
    target: np.ndarray
    target_clock: ClockModel
    turnaround: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    c: float = SPEED_OF_LIGHT
    rounds: int = 2

    def __post_init__(self):
        anchors = _frozen(self.anchors)
        if anchors.ndim != 2 or anchors.shape[1] != 2:
            raise ValueError("anchors must have shape (N, 2)")
        n = anchors.shape[0]
        if n < 3:
            raise ValueError("at least 3 anchors are required")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "target", _frozen(self.target).reshape(2))
        for name in ("turnaround", "sigma", "gamma"):
            v = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (n,))
            object.__setattr__(self, name, _frozen(v))
        if not np.all(np.isfinite(anchors)) or not np.all(np.isfinite(self.target)):
            raise ValueError("positions must be finite")
        if np.any(self.sigma <= 0) or np.any(self.gamma <= 0):
            raise ValueError("sigma and gamma must be strictly positive")
        if np.any(self.turnaround < 0):
            raise ValueError("turn-around times must be non-negative")
        if not self.c > 0:
            raise ValueError("propagation speed must be positive")
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise ValueError("rounds must be a positive integer")
        object.__setattr__(self, "rounds", int(self.rounds))

    @property
    def n_anchors(self):
        return self.anchors.shape[0]

    @property
    def distances(self):
        return distances(self.target, self.anchors)

    @property
    def alpha(self):
        return 1.0 / self.target_clock.skew

    @classmethod
    def from_meters(cls, anchors, target, *, c_sigma_m, c_gamma_m=None,
                    turnaround_s=1e-6, skew=1.0, offset=0.0,
                    c=SPEED_OF_LIGHT, rounds=2):
        """Build a scenario with noise levels given as c*sigma in meters."""
        if c_gamma_m is None:
            c_gamma_m = c_sigma_m
        return cls(
            anchors=anchors,
            target=target,
            target_clock=ClockModel(skew, offset),
            turnaround=turnaround_s,
            sigma=np.asarray(c_sigma_m, dtype=float) / c,
            gamma=np.asarray(c_gamma_m, dtype=float) / c,
            c=c,
            rounds=rounds,
        )


@dataclass(frozen=True)
class MeasurementBatch:
    """K x N TW-TOA readings ``z`` and turn-around estimates ``t_hat`` (seconds)."""

    z: np.ndarray
    t_hat: np.ndarray
    nlos: np.ndarray | None = None

    def __post_init__(self):
        z = _frozen(self.z)
        t_hat = _frozen(self.t_hat)
        if z.ndim != 2 or z.shape != t_hat.shape:
            raise ValueError("z and t_hat must be K x N matrices of equal shape")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(t_hat))):
            raise ValueError("measurements must be finite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t_hat", t_hat)
        if self.nlos is None:
            object.__setattr__(self, "nlos", _frozen(np.zeros(z.shape, bool), bool))
        else:
            nlos = _frozen(self.nlos, bool)
            if nlos.shape != z.shape:
                raise ValueError("nlos mask shape mismatch")
            object.__setattr__(self, "nlos", nlos)

    @property
    def rounds(self):
        return self.z.shape[0]

    @property
    def n_anchors(self):
        return self.z.shape[1]

    def permute_anchors(self, perm):
        perm = np.asarray(perm)
        return MeasurementBatch(self.z[:, perm], self.t_hat[:, perm], self.nlos[:, perm])


class SolverStatus(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    DEGENERATE = "Degenerate"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EstimateReport:
    """Output shared by every estimator."""

    method: str
    position: np.ndarray
    skew: float
    status: SolverStatus = SolverStatus.CONVERGED
    iterations: int = 0
    residual_l1: float = float("nan")
    turnaround: np.ndarray | None = None
    objective: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "position", _frozen(self.position).reshape(2))
        if self.turnaround is not None:
            object.__setattr__(self, "turnaround", _frozen(self.turnaround))
        if self.status is SolverStatus.CONVERGED and not self.skew > 0:
            raise ValueError("converged estimate must have positive skew")

    @property
    def alpha(self):
        return 1.0 / self.skew

    def error(self, truth):
        return float(np.linalg.norm(self.position - np.asarray(truth, dtype=float)))


@dataclass(frozen=True)
class UnitScale:
    """Maps seconds and meters to dimensionless O(1) quantities.

    A time t becomes ``c * t / length`` and a length l becomes ``l / length``.
    """

    c: float
    length: float

    @classmethod
    def for_anchors(cls, anchors, c):
        anchors = np.asarray(anchors, dtype=float)
        span = float(np.max(np.ptp(anchors, axis=0))) if len(anchors) > 1 else 0.0
        return cls(c=c, length=max(span, float(np.max(np.abs(anchors))), 1.0))

    def time(self, t):
        return np.asarray(t, dtype=float) * (self.c / self.length)

    def length_(self, x):
        return np.asarray(x, dtype=float) / self.length


def distances(x, anchors):
    x = np.asarray(x, dtype=float)
    return np.linalg.norm(np.asarray(anchors, dtype=float) - x, axis=-1)


def predict_twtoa(scenario: NetworkScenario, i: int) -> float:
    """Noiseless mean of z_i: w * d_i / c + w * T_i / 2.

    The clock offset cancels in the two-way exchange.
    """
    if not 0 <= i < scenario.n_anchors:
        raise IndexError(f"anchor index {i} out of range")
    w = scenario.target_clock.skew
    d = float(np.linalg.norm(scenario.target - scenario.anchors[i]))
    return w * d / scenario.c + w * scenario.turnaround[i] / 2.0


def predict_all(scenario: NetworkScenario) -> np.ndarray:
    w = scenario.target_clock.skew
    return w * (scenario.distances / scenario.c + scenario.turnaround / 2.0)


def residuals(position, alpha, batch: MeasurementBatch, anchors, c) -> np.ndarray:
    """K x N matrix of z * alpha - t_hat / 2 - d / c (seconds)."""
    d = distances(position, anchors)
    return batch.z * alpha - batch.t_hat / 2.0 - d / c


def residual_l1(position, alpha, batch: MeasurementBatch, anchors, c) -> float:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return float(np.sum(np.abs(residuals(position, alpha, batch, anchors, c))))
