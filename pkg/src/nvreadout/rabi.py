"""Oscillation datasets: sinusoid fitting, target assignment, residuals.

A Rabi dataset is an ordered set of (pulse duration, trace) pairs.  The
population oscillates sinusoidally with pulse duration, which gives a
free source of regression targets: fit

    q(t) = offset + amplitude * cos(2*pi*frequency*t + phase)

to any per-duration population series (the fit is invariant to affine
processing of the series, so even raw per-measurement count sums work),
then rescale the fitted curve so its extrema map to 1 and 0.  Points
nearest the fitted extrema get exactly 1 and 0.

Sinusoid fitting is multimodal in frequency, so the fit runs a
deterministic grid of frequency starts around the dominant periodogram
frequency, solves the linear subproblem at each start and polishes with
damped (Levenberg-Marquardt) least squares, keeping the best
sum-of-squares solution; ties break toward the lowest frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .errors import FitFailureError, ParameterError, ShapeError
from .regression import TrainingExample
from .traces import EmissionProfile, TimeTrace, mix_profile, simulate_trace

__all__ = [
    "RabiDataset",
    "SinusoidFit",
    "ResidualReport",
    "fit_rabi",
    "assign_targets",
    "residuals",
    "simulate_rabi_dataset",
]

_MIN_POINTS = 8
_FREQ_GRID_SPAN = (0.25, 4.0)   # scan range around the dominant frequency
_FREQ_GRID_SIZE = 25
_AMPLITUDE_SNR = 3.0            # amplitude must exceed this multiple of rms


@dataclass(frozen=True)
class SinusoidFit:
    """offset + amplitude * cos(2*pi*frequency*t + phase), amplitude >= 0."""

    offset: float
    amplitude: float
    frequency: float            # cycles per ns
    phase: float                # radians, in [0, 2*pi)
    residual_rms: float

    def __post_init__(self):
        if self.amplitude < 0 or not (self.frequency > 0):
            raise ParameterError("amplitude must be >= 0 and frequency > 0")
        if not (0.0 <= self.phase < 2.0 * np.pi):
            raise ParameterError("phase must lie in [0, 2*pi)")

    def value(self, t):
        """Fitted curve at time(s) t (ns)."""
        return self.offset + self.amplitude * np.cos(
            2.0 * np.pi * self.frequency * np.asarray(t, dtype=float) + self.phase)

    def normalized(self, t):
        """Fitted curve rescaled so its extrema map to exactly 1 and 0."""
        if self.amplitude == 0:
            raise FitFailureError("cannot normalize a flat fit")
        return (np.asarray(self.value(t)) - (self.offset - self.amplitude)) / \
            (2.0 * self.amplitude)

    def extremum_times(self, t_min: float, t_max: float,
                       kind: str) -> np.ndarray:
        """Times of fitted peaks ('peak') or troughs ('trough') in [t_min, t_max]."""
        target = 0.0 if kind == "peak" else np.pi
        w = 2.0 * np.pi * self.frequency
        k_lo = int(np.floor((w * t_min + self.phase - target) / (2.0 * np.pi))) - 1
        k_hi = int(np.ceil((w * t_max + self.phase - target) / (2.0 * np.pi))) + 1
        ks = np.arange(k_lo, k_hi + 1)
        times = (target - self.phase + 2.0 * np.pi * ks) / w
        return times[(times >= t_min) & (times <= t_max)]


@dataclass(frozen=True)
class RabiDataset:
    """Ordered (pulse duration, trace) pairs with optional fit and targets."""

    points: tuple[tuple[float, TimeTrace], ...]
    fit: SinusoidFit | None = None
    targets: tuple[float, ...] | None = None

    def __post_init__(self):
        pts = tuple((float(d), tr) for d, tr in self.points)
        if len(pts) < 1:
            raise ParameterError("dataset needs at least one point")
        durations = np.array([d for d, _ in pts])
        if np.any(np.diff(durations) <= 0):
            raise ParameterError("durations must be strictly increasing")
        first = pts[0][1]
        for d, tr in pts:
            if len(tr) != len(first) or tr.bin_width_ns != first.bin_width_ns:
                raise ShapeError(f"trace at duration {d} has mismatched shape")
            if tr.repetitions != first.repetitions:
                raise ShapeError(f"trace at duration {d} has mismatched repetitions")
        if self.targets is not None and len(self.targets) != len(pts):
            raise ShapeError("targets length differs from points")
        object.__setattr__(self, "points", pts)
        if self.targets is not None:
            object.__setattr__(self, "targets", tuple(float(q) for q in self.targets))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def durations(self) -> np.ndarray:
        return np.array([d for d, _ in self.points])

    @property
    def traces(self) -> list[TimeTrace]:
        return [tr for _, tr in self.points]

    @property
    def repetitions(self) -> int:
        return self.points[0][1].repetitions

    @property
    def bin_width_ns(self) -> float:
        return self.points[0][1].bin_width_ns

    def with_fit(self, fit: SinusoidFit, targets) -> "RabiDataset":
        return replace(self, fit=fit, targets=tuple(float(q) for q in targets))


@dataclass(frozen=True)
class ResidualReport:
    """Residuals of a series against a fitted sinusoid."""

    values: np.ndarray          # point value minus fitted value
    mean_abs: float
    rms: float


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def _dominant_frequency(t: np.ndarray, y: np.ndarray) -> float:
    """Dominant nonzero frequency of the series from a padded periodogram."""
    dt = float(np.median(np.diff(t)))
    n = len(t)
    spectrum = np.abs(np.fft.rfft(y - y.mean(), 4 * n))
    freqs = np.fft.rfftfreq(4 * n, dt)
    return float(freqs[1 + int(np.argmax(spectrum[1:]))])


def fit_rabi(durations, values) -> SinusoidFit:
    """Least-squares sinusoid fit of a per-duration series.

    Parameters
    ----------
    durations, values : sequences of float
        At least 8 points; the durations must span at least one period of
        the fitted oscillation.

    Raises
    ------
    FitFailureError
        On too few points, a span below one fitted period, or no credible
        oscillation (fitted amplitude below 3x the residual rms).
    """
    t = np.asarray(durations, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise ShapeError("durations and values must be equal-length 1-d sequences")
    if t.size < _MIN_POINTS:
        raise FitFailureError(f"need at least {_MIN_POINTS} points, got {t.size}")

    f_dom = _dominant_frequency(t, y)
    if f_dom <= 0:
        raise FitFailureError("no dominant oscillation frequency found")

    best_sse = np.inf
    best = None
    for f0 in np.geomspace(_FREQ_GRID_SPAN[0] * f_dom,
                           _FREQ_GRID_SPAN[1] * f_dom, _FREQ_GRID_SIZE):
        phase_arg = 2.0 * np.pi * f0 * t
        design = np.column_stack([np.ones_like(t), np.cos(phase_arg), np.sin(phase_arg)])
        (c0, c1, c2), *_ = np.linalg.lstsq(design, y, rcond=None)

        def model_residuals(theta):
            offset, a, b, f = theta
            arg = 2.0 * np.pi * f * t
            return offset + a * np.cos(arg) + b * np.sin(arg) - y

        sol = least_squares(model_residuals, [c0, c1, c2, f0],
                            method="lm", max_nfev=400)
        sse = float(sol.fun @ sol.fun)
        if sse < best_sse * (1.0 - 1e-12):    # ties keep the lower-frequency start
            best_sse = sse
            best = sol.x

    offset, a, b, f = best
    if f < 0:                                  # cos is even: flip to positive frequency
        f, b = -f, -b
    amplitude = float(np.hypot(a, b))
    phase = float(np.arctan2(-b, a) % (2.0 * np.pi))
    rms = float(np.sqrt(best_sse / t.size))

    span_periods = (t[-1] - t[0]) * f
    if span_periods < 1.0:
        raise FitFailureError(
            f"data span covers {span_periods:.3f} fitted periods; need >= 1")
    if amplitude < _AMPLITUDE_SNR * rms:
        raise FitFailureError(
            f"no credible oscillation: amplitude {amplitude:.4g} < "
            f"{_AMPLITUDE_SNR} * residual rms {rms:.4g}")
    return SinusoidFit(float(offset), amplitude, float(f), phase, rms)


def assign_targets(dataset: RabiDataset, fit: SinusoidFit) -> list[TrainingExample]:
    """Per-point regression targets from a fitted oscillation.

    Every target is the fitted curve rescaled to [0, 1] (extrema map to
    1 and 0) and clipped; the dataset point nearest each fitted peak gets
    exactly 1 and nearest each fitted trough exactly 0.
    """
    t = dataset.durations
    q = np.clip(fit.normalized(t), 0.0, 1.0)
    for kind, value in (("peak", 1.0), ("trough", 0.0)):
        for te in fit.extremum_times(float(t[0]), float(t[-1]), kind):
            q[int(np.argmin(np.abs(t - te)))] = value
    return [TrainingExample(trace, float(qk))
            for (_, trace), qk in zip(dataset.points, q)]


def residuals(durations, values, fit: SinusoidFit) -> ResidualReport:
    """Point-minus-fit residuals with their mean absolute value and rms."""
    t = np.asarray(durations, dtype=float)
    y = np.asarray(values, dtype=float)
    r = y - fit.value(t)
    return ResidualReport(r, float(np.mean(np.abs(r))), float(np.sqrt(np.mean(r * r))))


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def simulate_rabi_dataset(profile0: EmissionProfile, profile1: EmissionProfile,
                          repetitions: int, seed: int, points: int = 60,
                          period_ns: float = 200.0, span_ns: float = 600.0,
                          ) -> tuple[RabiDataset, np.ndarray]:
    """Simulate an oscillation dataset plus its ground-truth populations.

    Point k sits at duration k * span/(points-1) with population
    0.5 + 0.5*cos(2*pi*duration/period) and is drawn with seed ``seed + k``.

    Returns
    -------
    (dataset, truth)
        The dataset and the true population of every point.
    """
    if points < 2:
        raise ParameterError("points must be >= 2")
    durations = np.linspace(0.0, span_ns, points)
    truth = 0.5 + 0.5 * np.cos(2.0 * np.pi * durations / period_ns)
    pts = []
    for k, (d, p) in enumerate(zip(durations, truth)):
        trace = simulate_trace(mix_profile(float(p), profile0, profile1),
                               repetitions, seed + k,
                               label=f"rabi duration={d:.6g} ns")
        pts.append((float(d), trace))
    return RabiDataset(tuple(pts)), truth
