"""Photon time traces and the Poisson trace simulator.

A *trace* is the histogram of photon arrival times accumulated over many
repeated measurements of the same prepared state, binned on a fixed grid
(2 ns by default).  An *emission profile* is the corresponding noiseless
quantity: expected photons per bin for a single measurement.

Profiles for the two reference states are generated from a small
phenomenological model

    rate_bright(t) = steady * (1 + bright_boost * exp(-t / tau_bright))
    rate_dark(t)   = steady * (1 - dark_dip * s(t) * exp(-t / tau_isc))

where ``s(t) = 1 - exp(-t / tau_onset)`` describes how quickly the
shelving-induced fluorescence deficit of the dark state develops
(``tau_onset = 0`` switches the factor off and both transients start at
t = 0).  The bright state fluoresces more in the first few hundred
nanoseconds and both profiles converge to the same steady level.  Bin
rates use the midpoint rule: rate(t_center) * bin_width.

Counts are Poisson: with R repetitions, bin i of a simulated trace is an
independent draw from Poisson(R * rate_i).  Simulation uses the
counter-based Philox generator keyed by an explicit seed, so batches of
traces with distinct seeds are reproducible in any execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, ShapeError

__all__ = [
    "TimeTrace",
    "EmissionProfile",
    "PhotodynamicsParams",
    "paper_like_params",
    "make_profiles",
    "mix_profile",
    "simulate_trace",
    "expected_trace",
    "differential",
]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeTrace:
    """Binned photon counts for one experimental condition.

    ``counts[i]`` is the number of photons registered in bin i summed over
    all ``repetitions`` measurements.
    """

    counts: np.ndarray              # nonnegative integers, length >= 1
    repetitions: int
    bin_width_ns: float = 2.0
    label: str | None = None
    seed: int | None = None         # RNG seed when simulated, for provenance

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size < 1:
            raise ParameterError("counts must be a non-empty 1-d sequence")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.floor(counts)):
                raise ParameterError("counts must be integers")
            counts = counts.astype(np.int64)
        else:
            counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise ParameterError("counts must be nonnegative")
        if not (self.bin_width_ns > 0):
            raise ParameterError("bin_width_ns must be positive")
        if not (isinstance(self.repetitions, (int, np.integer)) and self.repetitions >= 1):
            raise ParameterError("repetitions must be an integer >= 1")
        object.__setattr__(self, "repetitions", int(self.repetitions))
        object.__setattr__(self, "counts", _readonly(counts))

    def __len__(self) -> int:
        return int(self.counts.size)

    @property
    def rates(self) -> np.ndarray:
        """Counts per bin per single measurement."""
        return self.counts / self.repetitions


@dataclass(frozen=True)
class EmissionProfile:
    """Expected photons per bin for a single measurement of a pure state."""

    rates: np.ndarray               # nonnegative reals
    bin_width_ns: float = 2.0

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        if rates.ndim != 1 or rates.size < 1:
            raise ParameterError("rates must be a non-empty 1-d sequence")
        if np.any(~np.isfinite(rates)) or np.any(rates < 0):
            raise ParameterError("rates must be finite and nonnegative")
        if not (self.bin_width_ns > 0):
            raise ParameterError("bin_width_ns must be positive")
        object.__setattr__(self, "rates", _readonly(rates))

    def __len__(self) -> int:
        return int(self.rates.size)

    @property
    def photons_per_measurement(self) -> float:
        return float(self.rates.sum())


@dataclass(frozen=True)
class PhotodynamicsParams:
    """Parameters of the phenomenological two-state emission model."""

    steady_rate: float              # photons/ns per measurement, steady state
    bright_boost: float             # initial fractional excess of the bright state
    dark_dip: float                 # fractional deficit of the dark state, in [0, 1)
    tau_bright_ns: float            # decay constant of the bright transient
    tau_isc_ns: float = 250.0       # recovery constant of the dark transient
    tau_onset_ns: float = 0.0       # development time of the dark deficit; 0 = instant
    trace_length_ns: float = 1000.0
    bin_width_ns: float = 2.0

    def __post_init__(self):
        positive = ("steady_rate", "tau_bright_ns", "tau_isc_ns",
                    "trace_length_ns", "bin_width_ns")
        for name in positive:
            if not (getattr(self, name) > 0):
                raise ParameterError(f"{name} must be positive")
        if not (0.0 <= self.dark_dip < 1.0):
            raise ParameterError("dark_dip must be in [0, 1)")
        if self.bright_boost < 0:
            raise ParameterError("bright_boost must be nonnegative")
        if self.tau_onset_ns < 0:
            raise ParameterError("tau_onset_ns must be nonnegative")
        if self.bin_width_ns > self.trace_length_ns:
            raise ParameterError("bin_width_ns must not exceed trace_length_ns")

    @property
    def n_bins(self) -> int:
        return int(round(self.trace_length_ns / self.bin_width_ns))


def paper_like_params() -> PhotodynamicsParams:
    """Default calibration of the simulator.

    Constants were tuned by ``scripts/calibrate_preset.py`` so that on the
    noiseless profiles
      * mean photons per measurement (average of both states) is 0.020,
      * the gated contrast at its best window is 0.30 (window ~184 ns),
      * the swept contrast and total variance have interior optima with the
        contrast optimum at a shorter window than the variance optimum
        (184 ns vs 460 ns),
      * total variance at the max-contrast window is ~1.62x its minimum.
    """
    return PhotodynamicsParams(
        steady_rate=2.1215e-05,
        bright_boost=0.37,
        dark_dip=0.90,
        tau_bright_ns=50.0,
        tau_isc_ns=250.0,
        tau_onset_ns=160.0,
        trace_length_ns=1000.0,
        bin_width_ns=2.0,
    )


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def make_profiles(params: PhotodynamicsParams) -> tuple[EmissionProfile, EmissionProfile]:
    """Build the (bright, dark) emission profiles for the model parameters.

    Returns
    -------
    (profile_bright, profile_dark)
        Per-bin expected photons per measurement.  ``profile_bright`` bin
        rates are >= ``profile_dark`` rates everywhere, and both converge
        to ``steady_rate * bin_width`` at late times.
    """
    t = (np.arange(params.n_bins) + 0.5) * params.bin_width_ns  # bin centers
    bright = 1.0 + params.bright_boost * np.exp(-t / params.tau_bright_ns)
    if params.tau_onset_ns > 0:
        onset = 1.0 - np.exp(-t / params.tau_onset_ns)
    else:
        onset = 1.0
    dark = 1.0 - params.dark_dip * onset * np.exp(-t / params.tau_isc_ns)
    scale = params.steady_rate * params.bin_width_ns
    return (
        EmissionProfile(scale * bright, params.bin_width_ns),
        EmissionProfile(scale * dark, params.bin_width_ns),
    )


def mix_profile(population: float, profile0: EmissionProfile,
                profile1: EmissionProfile) -> EmissionProfile:
    """Profile of a superposition: population * bright + (1 - population) * dark."""
    if not (0.0 <= population <= 1.0):
        raise DomainError(f"population must be in [0, 1], got {population}")
    if len(profile0) != len(profile1):
        raise ShapeError(f"profile lengths differ: {len(profile0)} != {len(profile1)}")
    if profile0.bin_width_ns != profile1.bin_width_ns:
        raise ShapeError("profile bin widths differ")
    rates = population * profile0.rates + (1.0 - population) * profile1.rates
    return EmissionProfile(rates, profile0.bin_width_ns)


def simulate_trace(profile: EmissionProfile, repetitions: int, seed: int,
                   label: str | None = None) -> TimeTrace:
    """Draw one Poisson trace from a profile.

    Bin i is an independent Poisson draw with mean
    ``repetitions * profile.rates[i]``.  The Philox counter-based generator
    keyed by ``seed`` makes the draw a pure function of
    (profile, repetitions, seed).
    """
    if repetitions < 1:
        raise ParameterError("repetitions must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
    counts = rng.poisson(repetitions * profile.rates)
    return TimeTrace(counts, repetitions=int(repetitions),
                     bin_width_ns=profile.bin_width_ns, label=label, seed=int(seed))


def expected_trace(profile: EmissionProfile, repetitions: int,
                   label: str | None = None) -> TimeTrace:
    """Noiseless counterpart of :func:`simulate_trace`: counts = round(R * rate)."""
    if repetitions < 1:
        raise ParameterError("repetitions must be >= 1")
    counts = np.rint(repetitions * profile.rates).astype(np.int64)
    return TimeTrace(counts, repetitions=int(repetitions),
                     bin_width_ns=profile.bin_width_ns, label=label)


def differential(trace0: TimeTrace, trace1: TimeTrace) -> np.ndarray:
    """Per-measurement differential signal (trace0 - trace1) / repetitions.

    Both traces must share length and bin width.  Traces taken with
    different repetition counts are compared per measurement.
    """
    if len(trace0) != len(trace1):
        raise ShapeError(f"trace lengths differ: {len(trace0)} != {len(trace1)}")
    if trace0.bin_width_ns != trace1.bin_width_ns:
        raise ShapeError("trace bin widths differ")
    return trace0.counts / trace0.repetitions - trace1.counts / trace1.repetitions
