"""Readout of time-resolved single-photon fluorescence traces.

Two readout strategies over binned photon traces, plus the simulator that
serves as their ground-truth oracle:

* :mod:`nvreadout.gating` - traditional time-gated count summation with
  contrast / total-variance window optimization,
* :mod:`nvreadout.regression` - a per-bin weighted linear estimator with
  nonnegative weights, trained by variance-regularized projected gradient
  descent,
* :mod:`nvreadout.traces` - Poisson trace simulator with a calibrated
  default preset,
* :mod:`nvreadout.rabi` - oscillation fitting and training-target
  assignment,
* :mod:`nvreadout.evaluation` - method comparison and trace repair,
* :mod:`nvreadout.io` / :mod:`nvreadout.cli` - file formats and the
  command-line pipeline.
"""

from .errors import (DegenerateBoundaryError, DegenerateTrainingError,
                     DivergenceError, DomainError, FitFailureError,
                     ParameterError, ParseError, ReadoutError, ShapeError,
                     StateError)
from .evaluation import (EvalReport, MethodEval, RepairPoint, RepairResult,
                         evaluate, gated_series, model_series, repair)
from .gating import (GateMetrics, GateWindow, SweepResult, contrast, gate_sum,
                     gated_population, rescale_sum, sweep_gate, total_variance)
from .rabi import (RabiDataset, ResidualReport, SinusoidFit, assign_targets,
                   fit_rabi, residuals, simulate_rabi_dataset)
from .regression import (LossBreakdown, ReadoutModel, TrainConfig,
                         TrainingExample, gated_equivalent_model, loss,
                         loss_gradient, predict, prediction_variance, train,
                         train_boundary, train_rabi)
from .traces import (EmissionProfile, PhotodynamicsParams, TimeTrace,
                     differential, expected_trace, make_profiles, mix_profile,
                     paper_like_params, simulate_trace)

__version__ = "0.1.0"
