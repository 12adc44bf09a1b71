"""Accuracy evaluation of nonnegative cross-sectional predictions with the
loss family ``|P - A|**p * A**q``."""
from crossloss._backend import BACKEND
from crossloss.blend import (
    AlignmentError, BlendResult, ControlSpec, WeightVector, blend_predictions,
    grid_search_weights, rescale_to_controls)
from crossloss.elicitation import (
    CleanedSamples, ElicitationSample, InsufficientSamplesError, RankDeficientError,
    RegressionFit, SpecificationResult, clean_samples, fit_loss_params, specification_test)
from crossloss.loss import (
    WEBSTER, DomainError, LossParams, Observation, PredictionSet, SignedLossRecord,
    bias_ranking, component_loss, component_losses, fellegi_loss, signed_loss, total_loss,
    webster_params)
from crossloss.metrics import (
    MetricReport, ScenarioTable, apportionment_metrics, average_estimated_variance, bryan_q,
    evaluate, generate_noisy_predictions, mape, mean_webster_loss, medape, p90_ape, rmse, rmspe,
    table1_demo)

__version__ = "0.1.0"
