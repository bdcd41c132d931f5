"""Per-bin weighted readout model and its variance-regularized trainer.

The model maps a trace to a population estimate

    p = sum_i weights[i] * counts[i] / repetitions + intercept

with nonnegative per-bin weights.  Weights live in per-measurement rate
space, so one trained model applies unchanged to test traces taken with
any repetition count.  Under Poisson counts the estimate's variance is

    var(p) = sum_i (weights[i] / repetitions)^2 * counts[i].

Training minimizes

    J = weight_factor * sum_j (p_j - target_j)^2  +  sum_j var_j

by projected gradient descent: plain fixed-step descent with negative
weights clamped to zero after every step (the intercept is unconstrained;
the gated estimator's exact-representation intercept is negative).
Features are preconditioned by a single global factor, the largest
per-measurement bin rate of the training set; descent steps are taken on
the per-example, unit-prediction-weight objective J / (weight_factor * m)
so the default learning rate is meaningful across training-set sizes.
The factor is stored on the model for provenance; predictions never
depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (DegenerateBoundaryError, DegenerateTrainingError,
                     DivergenceError, DomainError, ParameterError, ShapeError)
from .gating import GateWindow, _metric_curves
from .traces import TimeTrace

__all__ = [
    "ReadoutModel",
    "TrainingExample",
    "TrainConfig",
    "LossBreakdown",
    "predict",
    "prediction_variance",
    "loss",
    "loss_gradient",
    "train",
    "train_boundary",
    "train_rabi",
    "gated_equivalent_model",
]

_LOSS_SLACK = 1e-12          # relative tolerance for the monotone-descent check
_STOP_WINDOW = 100           # iterations spanned by the convergence test


@dataclass(frozen=True)
class LossBreakdown:
    """The two loss terms and their weighted total."""

    prediction_term: float      # sum of squared prediction errors, unweighted
    variance_term: float        # sum of per-example estimate variances
    weight_factor: float
    total: float                # weight_factor * prediction_term + variance_term

    def __post_init__(self):
        if self.prediction_term < 0 or self.variance_term < 0:
            raise ParameterError("loss terms must be nonnegative")


@dataclass(frozen=True)
class ReadoutModel:
    """Nonnegative per-bin weights plus intercept, in per-measurement space."""

    weights: np.ndarray
    intercept: float
    reference_bin_width_ns: float
    rate_scale: float = 1.0     # training-set max bin rate used as preconditioner
    trained_on: str = ""
    training_loss: LossBreakdown | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ParameterError("weights must be a non-empty 1-d sequence")
        if np.any(~np.isfinite(w)):
            raise ParameterError("weights must be finite")
        if w.min() < 0:
            raise ParameterError("weights must be nonnegative")
        if not (self.reference_bin_width_ns > 0):
            raise ParameterError("reference_bin_width_ns must be positive")
        if not (self.rate_scale > 0):
            raise ParameterError("rate_scale must be positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def dimension(self) -> int:
        return int(self.weights.size)


@dataclass(frozen=True)
class TrainingExample:
    """A trace with its target population in [0, 1]."""

    trace: TimeTrace
    target: float

    def __post_init__(self):
        if not (0.0 <= self.target <= 1.0):
            raise DomainError(f"target must be in [0, 1], got {self.target}")


@dataclass(frozen=True)
class TrainConfig:
    """Projected-gradient-descent settings.

    ``learning_rate`` is expressed in normalized feature space for the
    per-example, unit-prediction-weight objective; the same default works
    for two-trace boundary sets and full oscillation sets.
    """

    weight_factor: float = 1e4
    learning_rate: float = 1e-3
    max_iterations: int = 200_000
    relative_tolerance: float = 1e-9
    init: str = "gated-equal-weights"       # or "zeros"

    def __post_init__(self):
        if not (self.weight_factor >= 1):
            raise ParameterError("weight_factor must be >= 1")
        if not (self.learning_rate > 0):
            raise ParameterError("learning_rate must be positive")
        if self.max_iterations < 0:
            raise ParameterError("max_iterations must be nonnegative")
        if not (self.relative_tolerance > 0):
            raise ParameterError("relative_tolerance must be positive")
        if self.init not in ("gated-equal-weights", "zeros"):
            raise ParameterError(f"unknown init '{self.init}'")


# ---------------------------------------------------------------------------
# Model application
# ---------------------------------------------------------------------------

def _check_compatible(model: ReadoutModel, trace: TimeTrace) -> None:
    if len(trace) != model.dimension:
        raise ShapeError(
            f"trace has {len(trace)} bins, model expects {model.dimension}")
    if trace.bin_width_ns != model.reference_bin_width_ns:
        raise ShapeError(
            f"trace bin width {trace.bin_width_ns} ns differs from model's "
            f"{model.reference_bin_width_ns} ns")


def predict(model: ReadoutModel, trace: TimeTrace) -> float:
    """Population estimate for a trace (not clipped to [0, 1])."""
    _check_compatible(model, trace)
    return float(model.weights @ trace.rates + model.intercept)


def prediction_variance(model: ReadoutModel, trace: TimeTrace) -> float:
    """Poisson variance of the estimate: sum (weight/R)^2 * counts."""
    _check_compatible(model, trace)
    a = model.weights / trace.repetitions
    return float(a * a @ trace.counts)


# ---------------------------------------------------------------------------
# Loss and gradient
# ---------------------------------------------------------------------------

def _design(examples) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Stack per-measurement rates, repetition counts and targets."""
    if len(examples) == 0:
        raise DomainError("need at least one training example")
    n = len(examples[0].trace)
    width = examples[0].trace.bin_width_ns
    rows, reps, targets = [], [], []
    for k, ex in enumerate(examples):
        if len(ex.trace) != n:
            raise ShapeError(f"example {k} has {len(ex.trace)} bins, expected {n}")
        if ex.trace.bin_width_ns != width:
            raise ShapeError(f"example {k} bin width differs")
        rows.append(ex.trace.rates)
        reps.append(float(ex.trace.repetitions))
        targets.append(float(ex.target))
    return np.stack(rows), np.asarray(reps), np.asarray(targets), width


def loss(model: ReadoutModel, examples, weight_factor: float) -> LossBreakdown:
    """Evaluate both loss terms for a model on a training set."""
    rates, reps, targets, width = _design(examples)
    if width != model.reference_bin_width_ns or rates.shape[1] != model.dimension:
        raise ShapeError("examples incompatible with model")
    residuals = rates @ model.weights + model.intercept - targets
    pred = float(residuals @ residuals)
    var_coeff = (rates / reps[:, None]).sum(axis=0)
    var = float(model.weights * model.weights @ var_coeff)
    return LossBreakdown(pred, var, weight_factor, weight_factor * pred + var)


def loss_gradient(model: ReadoutModel, examples,
                  weight_factor: float) -> tuple[np.ndarray, float]:
    """Gradient of the total loss with respect to (weights, intercept)."""
    rates, reps, targets, width = _design(examples)
    if width != model.reference_bin_width_ns or rates.shape[1] != model.dimension:
        raise ShapeError("examples incompatible with model")
    residuals = rates @ model.weights + model.intercept - targets
    var_coeff = (rates / reps[:, None]).sum(axis=0)
    grad_w = 2.0 * weight_factor * (rates.T @ residuals) + 2.0 * var_coeff * model.weights
    grad_b = 2.0 * weight_factor * float(residuals.sum())
    return grad_w, grad_b


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _gated_init(examples, targets) -> tuple[np.ndarray, float] | None:
    """Equal weights over the best min-variance window of the extremal traces.

    Uses the brightest-target and darkest-target traces as boundary
    proxies.  Returns None when every window is degenerate in the target
    orientation (e.g. swapped labels), in which case the caller falls back
    to the zeros initialization.
    """
    bright = examples[int(np.argmax(targets))].trace
    dark = examples[int(np.argmin(targets))].trace
    # integer cumulative sums divided once keep this bitwise-consistent with
    # gated_equivalent_model built from the same traces
    cum_b = np.cumsum(bright.counts) / bright.repetitions
    cum_d = np.cumsum(dark.counts) / dark.repetitions
    valid, _, v = _metric_curves(cum_b, cum_d)
    if not valid.any():
        return None
    i = int(np.argmin(v))
    span = cum_b[i] - cum_d[i]
    weights = np.zeros(cum_b.size)
    weights[:i + 1] = 1.0 / span
    return weights, float(-cum_d[i] / span)


def _descend(rates: np.ndarray, reps: np.ndarray, targets: np.ndarray,
             weights0: np.ndarray, intercept0: float, config: TrainConfig,
             ) -> tuple[np.ndarray, float, int, np.ndarray]:
    """Projected gradient descent core.

    Works in normalized feature space (rates / max rate); returns physical
    weights, intercept, iterations run and the recorded loss history.
    """
    rate_scale = float(rates.max())
    if rate_scale <= 0:
        raise DegenerateTrainingError("all training traces are empty")
    z = rates / rate_scale
    m = z.shape[0]
    w = config.weight_factor
    step = config.learning_rate / (w * m)
    # variance term is sum_i v_i^2 * var_coeff_i in normalized coordinates
    var_coeff = (z / reps[:, None]).sum(axis=0) / rate_scale

    v = weights0 * rate_scale
    b = float(intercept0)
    history = np.empty(config.max_iterations + 1)
    t = 0
    while True:
        h = z @ v + b
        residuals = h - targets
        total = w * float(residuals @ residuals) + float(v * v @ var_coeff)
        if not np.isfinite(total):
            raise DivergenceError(
                "loss is not finite; lower the learning rate")
        if t > 0 and total > history[t - 1] * (1.0 + _LOSS_SLACK):
            raise DivergenceError(
                f"loss increased at iteration {t} "
                f"({history[t - 1]:.6e} -> {total:.6e}); lower the learning rate")
        history[t] = total
        if t >= config.max_iterations:
            break
        if t >= _STOP_WINDOW:
            ref = history[t - _STOP_WINDOW]
            if ref - total < config.relative_tolerance * ref:
                break
        grad_v = 2.0 * w * (z.T @ residuals) + 2.0 * var_coeff * v
        grad_b = 2.0 * w * float(residuals.sum())
        v = v - step * grad_v
        b = b - step * grad_b
        np.maximum(v, 0.0, out=v)
        t += 1
    return v / rate_scale, b, t, history[:t + 1]


def train(examples, config: TrainConfig | None = None,
          provenance: str = "") -> ReadoutModel:
    """Fit a readout model to labeled traces by projected gradient descent.

    Parameters
    ----------
    examples : sequence of TrainingExample
        At least two examples with at least two distinct targets.
    config : TrainConfig, optional
        Defaults are suitable for the shipped simulator presets.
    provenance : str
        Free text recorded on the model.

    Returns
    -------
    ReadoutModel
        Weights satisfy min(weights) >= 0 exactly; ``training_loss`` holds
        the final loss breakdown.
    """
    config = config or TrainConfig()
    if len(examples) < 2:
        raise DegenerateTrainingError("need at least two training examples")
    rates, reps, targets, width = _design(examples)
    if np.all(targets == targets[0]):
        raise DegenerateTrainingError("all targets are identical")
    if rates.max() <= 0:
        raise DegenerateTrainingError("all training traces are empty")

    if config.init == "gated-equal-weights":
        init = _gated_init(examples, targets)
        if init is None:
            init = (np.zeros(rates.shape[1]), 0.0)  # swapped/flat data fallback
    else:
        init = (np.zeros(rates.shape[1]), 0.0)

    weights, intercept, iterations, _ = _descend(
        rates, reps, targets, init[0], init[1], config)
    if iterations == 0:
        weights, intercept = init  # bitwise-unchanged initialization
    model = ReadoutModel(
        weights=weights,
        intercept=intercept,
        reference_bin_width_ns=width,
        rate_scale=float(rates.max()),
        trained_on=(provenance or
                    f"{len(examples)} examples, init={config.init}") +
                   f", iterations={iterations}",
    )
    return replace(model, training_loss=loss(model, examples, config.weight_factor))


def train_boundary(trace0: TimeTrace, trace1: TimeTrace,
                   config: TrainConfig | None = None) -> ReadoutModel:
    """Train on the two boundary traces with targets 1 (bright) and 0 (dark)."""
    if np.array_equal(trace0.counts, trace1.counts) and \
            trace0.repetitions == trace1.repetitions:
        raise DegenerateTrainingError("boundary traces are identical")
    examples = [TrainingExample(trace0, 1.0), TrainingExample(trace1, 0.0)]
    return train(examples, config,
                 provenance=f"boundary traces, repetitions="
                            f"{trace0.repetitions}/{trace1.repetitions}")


def train_rabi(dataset, config: TrainConfig | None = None) -> ReadoutModel:
    """Train on a whole oscillation dataset using its fitted targets.

    The dataset must carry a sinusoid fit and per-point targets (see
    :func:`nvreadout.rabi.fit_rabi` and :func:`nvreadout.rabi.assign_targets`).
    """
    from .errors import StateError  # local import keeps module deps one-way
    if dataset.fit is None or dataset.targets is None:
        raise StateError("dataset has no fit/targets; run fit_rabi and "
                         "assign_targets first")
    examples = [TrainingExample(trace, float(q))
                for (_, trace), q in zip(dataset.points, dataset.targets)]
    return train(examples, config,
                 provenance=f"oscillation set, {len(examples)} points, "
                            f"repetitions={dataset.repetitions}")


def gated_equivalent_model(trace0: TimeTrace, trace1: TimeTrace,
                           window: GateWindow) -> ReadoutModel:
    """Exact model form of the gated estimator for a given window.

    Equal weights 1 / (bright - dark per-measurement window sums) inside
    the window, zero outside, intercept -dark / (bright - dark): applied
    to any trace this reproduces the gated population estimate and its
    variance identically.
    """
    if len(trace0) != len(trace1) or trace0.bin_width_ns != trace1.bin_width_ns:
        raise ShapeError("boundary traces have mismatched shape")
    window.check_fits(len(trace0))
    sel = slice(window.start_bin, window.stop_bin)
    bright = float(trace0.counts[sel].sum() / trace0.repetitions)
    dark = float(trace1.counts[sel].sum() / trace1.repetitions)
    span = bright - dark
    if not (span > 0):
        raise DegenerateBoundaryError(
            f"window sums degenerate: bright={bright}, dark={dark}")
    weights = np.zeros(len(trace0))
    weights[sel] = 1.0 / span
    return ReadoutModel(
        weights=weights,
        intercept=-dark / span,
        reference_bin_width_ns=trace0.bin_width_ns,
        rate_scale=1.0,
        trained_on=f"gated-equivalent, window=[{window.start_bin},{window.stop_bin})",
    )
