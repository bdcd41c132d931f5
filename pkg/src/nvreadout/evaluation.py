"""Method comparison on a test dataset: variances, errors, contrast, repair.

Three processing methods are compared on the same test traces:

* ``max-C gate``  - gated estimator at the maximum-contrast window,
* ``min-V gate``  - gated estimator at the minimum-total-variance window,
* ``ML``          - a trained weighted readout model.

Gated methods are calibrated by boundary-trace window sums rescaled to the
test repetition count, which makes their variance formula agree exactly
with the weighted model's variance propagation.  Two precision measures
are reported per method: the average formula variance (Poisson
propagation through the estimator) and the empirical mean squared error
against ground truth when available, else against the method's own
sinusoid fit.  Contrast is the peak-minus-trough of the method's own
fitted oscillation in its own population units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitFailureError, ShapeError
from .gating import GateWindow, gate_sum, gated_population
from .rabi import RabiDataset, SinusoidFit, fit_rabi
from .regression import ReadoutModel, predict, prediction_variance
from .traces import TimeTrace

__all__ = [
    "MethodEval",
    "EvalReport",
    "RepairPoint",
    "RepairResult",
    "gated_series",
    "model_series",
    "evaluate",
    "repair",
]

METHOD_MAX_C = "max-C gate"
METHOD_MIN_V = "min-V gate"
METHOD_ML = "ML"


@dataclass(frozen=True)
class MethodEval:
    method: str
    avg_formula_variance: float
    empirical_mse: float
    contrast_measured: float


@dataclass(frozen=True)
class EvalReport:
    """Per-method precision records plus pairwise relative reductions.

    ``reductions[(a, b)]`` is 1 - V_a / V_b for average formula variances.
    """

    methods: tuple[MethodEval, ...]
    reductions: dict[tuple[str, str], float]
    truth_based: bool

    def method(self, name: str) -> MethodEval:
        for m in self.methods:
            if m.method == name:
                return m
        raise KeyError(name)


@dataclass(frozen=True)
class RepairPoint:
    duration_ns: float
    p_original: float
    p_repaired: float
    q_fit: float                # original series' fitted value at this duration


@dataclass(frozen=True)
class RepairResult:
    points: tuple[RepairPoint, ...]
    fit_original: SinusoidFit
    fit_repaired: SinusoidFit
    rms_original: float         # original vs its own fit
    rms_repaired: float         # repaired vs its own fit


def gated_series(dataset: RabiDataset, window: GateWindow, boundary0: TimeTrace,
                 boundary1: TimeTrace) -> tuple[np.ndarray, np.ndarray]:
    """Gated populations and variances for every dataset point.

    Boundary window sums are rescaled to the dataset's repetition count
    before applying the estimator.
    """
    reps = dataset.repetitions
    bright = gate_sum(boundary0, window) * reps / boundary0.repetitions
    dark = gate_sum(boundary1, window) * reps / boundary1.repetitions
    p = np.empty(len(dataset))
    v = np.empty(len(dataset))
    for k, (_, trace) in enumerate(dataset.points):
        p[k], v[k] = gated_population(gate_sum(trace, window), bright, dark)
    return p, v


def model_series(dataset: RabiDataset, model: ReadoutModel,
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Model populations and variances for every dataset point."""
    p = np.empty(len(dataset))
    v = np.empty(len(dataset))
    for k, (_, trace) in enumerate(dataset.points):
        p[k] = predict(model, trace)
        v[k] = prediction_variance(model, trace)
    return p, v


def _method_eval(name: str, durations: np.ndarray, p: np.ndarray,
                 variances: np.ndarray, truth: np.ndarray | None) -> MethodEval:
    # a method whose series cannot be fitted (e.g. a degenerate one-bin
    # window on noisy boundaries) still reports its variance; its contrast,
    # and without truth its error, become nan instead of failing the run
    try:
        fit = fit_rabi(durations, p)
        contrast_measured = 2.0 * fit.amplitude
    except FitFailureError:
        fit = None
        contrast_measured = float("nan")
    if truth is not None:
        mse = float(np.mean((p - truth) ** 2))
    elif fit is not None:
        mse = float(np.mean((p - fit.value(durations)) ** 2))
    else:
        mse = float("nan")
    return MethodEval(name, float(np.mean(variances)), mse, contrast_measured)


def evaluate(test: RabiDataset, model: ReadoutModel, max_c_window: GateWindow,
             min_v_window: GateWindow, boundary0: TimeTrace, boundary1: TimeTrace,
             truth=None) -> EvalReport:
    """Compare gated baselines and the trained model on a test dataset.

    Parameters
    ----------
    test : RabiDataset
        Test traces, all at one repetition count.
    model : ReadoutModel
        Trained weighted estimator.
    max_c_window, min_v_window : GateWindow
        Sweep optima used for the two gated baselines.
    boundary0, boundary1 : TimeTrace
        Boundary traces calibrating the gated baselines.
    truth : sequence of float, optional
        Ground-truth populations; when given, empirical errors are
        computed against it instead of each method's own fit.
    """
    durations = test.durations
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        if truth.shape != durations.shape:
            raise ShapeError("truth length differs from test set")

    rows = []
    variances = {}
    for name, window in ((METHOD_MAX_C, max_c_window), (METHOD_MIN_V, min_v_window)):
        p, v = gated_series(test, window, boundary0, boundary1)
        rows.append(_method_eval(name, durations, p, v, truth))
        variances[name] = rows[-1].avg_formula_variance
    p, v = model_series(test, model)
    rows.append(_method_eval(METHOD_ML, durations, p, v, truth))
    variances[METHOD_ML] = rows[-1].avg_formula_variance

    reductions = {}
    for a in variances:
        for b in variances:
            if a != b:
                reductions[(a, b)] = 1.0 - variances[a] / variances[b]
    return EvalReport(tuple(rows), reductions, truth is not None)


def repair(dataset: RabiDataset, model: ReadoutModel, window: GateWindow,
           boundary0: TimeTrace, boundary1: TimeTrace) -> RepairResult:
    """Original (gated) and repaired (model) populations for every point.

    The original series uses the given window (normally the min-variance
    optimum) calibrated by the boundary traces; the repaired series is the
    model's output.  Both series get their own sinusoid fit; ``q_fit``
    tabulates the original's fitted curve.
    """
    durations = dataset.durations
    p_orig, _ = gated_series(dataset, window, boundary0, boundary1)
    p_rep = np.array([predict(model, trace) for _, trace in dataset.points])
    fit_o = fit_rabi(durations, p_orig)
    fit_r = fit_rabi(durations, p_rep)
    q_fit = fit_o.value(durations)
    points = tuple(
        RepairPoint(float(d), float(po), float(pr), float(qf))
        for d, po, pr, qf in zip(durations, p_orig, p_rep, q_fit))
    rms_o = float(np.sqrt(np.mean((p_orig - q_fit) ** 2)))
    rms_r = float(np.sqrt(np.mean((p_rep - fit_r.value(durations)) ** 2)))
    return RepairResult(points, fit_o, fit_r, rms_o, rms_r)
