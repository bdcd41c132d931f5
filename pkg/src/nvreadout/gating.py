"""Time-gated readout: gated sums, population estimator, gate-width sweep.

The traditional estimator sums counts in a gate window and maps the sum
linearly so that the bright-state boundary reads 1 and the dark-state
boundary reads 0.  Window quality is judged by two competing figures of
merit computed from the boundary gated sums (bright B, dark D):

    contrast        C = (B - D) / B
    total variance  V = (B + D) / (2 (B - D)^2)

V is the population-estimate variance integrated over all populations in
[0, 1].  Sweeping the window width trades one against the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBoundaryError, ShapeError
from .traces import TimeTrace

__all__ = [
    "GateWindow",
    "GateMetrics",
    "SweepResult",
    "gate_sum",
    "gated_population",
    "contrast",
    "total_variance",
    "sweep_gate",
    "rescale_sum",
]


@dataclass(frozen=True)
class GateWindow:
    """Contiguous bin window [start_bin, start_bin + width_bins)."""

    start_bin: int = 0
    width_bins: int = 1

    def __post_init__(self):
        if self.start_bin < 0:
            raise ShapeError("start_bin must be nonnegative")
        if self.width_bins < 1:
            raise ShapeError("width_bins must be >= 1")

    @property
    def stop_bin(self) -> int:
        return self.start_bin + self.width_bins

    def check_fits(self, n_bins: int) -> None:
        if self.stop_bin > n_bins:
            raise ShapeError(
                f"window [{self.start_bin}, {self.stop_bin}) overruns trace of {n_bins} bins")


@dataclass(frozen=True)
class GateMetrics:
    """Boundary gated sums and figures of merit for one window."""

    window: GateWindow
    bright_total: float         # gated sum of the bright boundary trace
    dark_total: float           # gated sum of the dark boundary trace
    contrast: float
    total_variance: float

    def __post_init__(self):
        if not (self.bright_total > self.dark_total > 0):
            raise DegenerateBoundaryError(
                f"need bright > dark > 0, got {self.bright_total}, {self.dark_total}")
        if not (0.0 < self.contrast < 1.0) or not (self.total_variance > 0):
            raise DegenerateBoundaryError("contrast/total_variance out of range")


@dataclass(frozen=True)
class SweepResult:
    """All per-width metrics of a gate sweep plus both optima.

    Widths whose boundary sums were degenerate (bright <= dark or dark <= 0,
    possible on noisy traces) carry no metrics and are listed in
    ``degenerate_widths``.  ``max_contrast``/``min_variance`` are None only
    when every width was degenerate.
    """

    start_bin: int
    bin_width_ns: float
    repetitions: int
    metrics: tuple[GateMetrics, ...]
    degenerate_widths: tuple[int, ...]
    max_contrast: GateMetrics | None
    min_variance: GateMetrics | None


def gate_sum(trace: TimeTrace, window: GateWindow) -> float:
    """Sum of counts inside the window."""
    window.check_fits(len(trace))
    return float(trace.counts[window.start_bin:window.stop_bin].sum())


def rescale_sum(value: float, from_repetitions: int, to_repetitions: int) -> float:
    """Express a gated sum taken at one repetition count at another."""
    return value * (to_repetitions / from_repetitions)


def gated_population(gate_counts: float, bright_total: float,
                     dark_total: float) -> tuple[float, float]:
    """Population estimate and its variance from a gated sum.

    All three arguments must be expressed at the same repetition count
    (rescale with :func:`rescale_sum` first if needed).

    Returns
    -------
    (population, variance)
        population = (gate_counts - dark_total) / (bright_total - dark_total),
        deliberately not clipped to [0, 1] so residual statistics stay
        unbiased; variance = gate_counts / (bright_total - dark_total)^2
        assuming Poisson counts.
    """
    span = bright_total - dark_total
    if not (span > 0):
        raise DegenerateBoundaryError(
            f"bright_total must exceed dark_total, got {bright_total} <= {dark_total}")
    return (gate_counts - dark_total) / span, gate_counts / (span * span)


def contrast(bright_total: float, dark_total: float) -> float:
    """Relative fluorescence difference (bright - dark) / bright."""
    if not (bright_total > 0):
        raise DegenerateBoundaryError(f"bright_total must be positive, got {bright_total}")
    return (bright_total - dark_total) / bright_total


def total_variance(bright_total: float, dark_total: float) -> float:
    """Population variance integrated over populations in [0, 1].

    Closed form (bright + dark) / (2 (bright - dark)^2), the integral of
    the per-population variance (p*bright + (1-p)*dark) / (bright-dark)^2.
    """
    span = bright_total - dark_total
    if not (span > 0):
        raise DegenerateBoundaryError(
            f"bright_total must exceed dark_total, got {bright_total} <= {dark_total}")
    return (bright_total + dark_total) / (2.0 * span * span)


def _metric_curves(cum_bright: np.ndarray, cum_dark: np.ndarray):
    """Contrast/variance curves over widths given cumulative window sums.

    Returns (valid, contrast, variance) arrays; invalid entries hold -inf/+inf
    so arg-extrema never select them.
    """
    valid = (cum_bright > cum_dark) & (cum_dark > 0)
    span = np.where(valid, cum_bright - cum_dark, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(valid, (cum_bright - cum_dark) / np.where(cum_bright > 0, cum_bright, 1.0),
                     -np.inf)
        v = np.where(valid, (cum_bright + cum_dark) / (2.0 * span * span), np.inf)
    return valid, c, v


def sweep_gate(trace0: TimeTrace, trace1: TimeTrace, start_bin: int = 0) -> SweepResult:
    """Evaluate every gate width on a pair of boundary traces.

    ``trace0`` must be the bright boundary.  Widths run from 1 to
    N - start_bin; ties on the optima break toward the smaller width.
    """
    if len(trace0) != len(trace1):
        raise ShapeError(f"trace lengths differ: {len(trace0)} != {len(trace1)}")
    if trace0.bin_width_ns != trace1.bin_width_ns:
        raise ShapeError("trace bin widths differ")
    if trace0.repetitions != trace1.repetitions:
        raise ShapeError("boundary traces must share a repetition count; "
                         "rescale one of them first")
    n = len(trace0)
    if not (0 <= start_bin < n):
        raise ShapeError(f"start_bin {start_bin} outside trace of {n} bins")

    cum0 = np.cumsum(trace0.counts[start_bin:]).astype(float)
    cum1 = np.cumsum(trace1.counts[start_bin:]).astype(float)
    valid, c, v = _metric_curves(cum0, cum1)

    metrics: list[GateMetrics] = []
    degenerate: list[int] = []
    by_width: dict[int, GateMetrics] = {}
    for i in range(cum0.size):
        width = i + 1
        if not valid[i]:
            degenerate.append(width)
            continue
        m = GateMetrics(GateWindow(start_bin, width), cum0[i], cum1[i],
                        float(c[i]), float(v[i]))
        metrics.append(m)
        by_width[width] = m

    best_c = by_width[int(np.argmax(c)) + 1] if metrics else None
    best_v = by_width[int(np.argmin(v)) + 1] if metrics else None
    return SweepResult(
        start_bin=start_bin,
        bin_width_ns=trace0.bin_width_ns,
        repetitions=trace0.repetitions,
        metrics=tuple(metrics),
        degenerate_widths=tuple(degenerate),
        max_contrast=best_c,
        min_variance=best_v,
    )
