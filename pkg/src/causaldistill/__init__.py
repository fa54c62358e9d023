"""Causal feature distillation for imbalanced risk prediction.

The library screens covariates with a group-Lasso outcome network, fits
per-feature propensity models with adaptive group Lasso, estimates each
feature's causal response curve, rewrites tabular data into causal feature
attributions, and trains a risk classifier on the distilled data.
"""

from .attribution import (AttributionMap, SigmaModel, causal_expectation,
                          causal_feature_attribution, causal_feature_importance,
                          fit_sigma, local_causal_gradient, response_curve)
from .data import Dataset, Encoder, Feature, FeatureSchema, load_dataset, save_dataset, stratified_split
from .errors import (AlreadyDistilledError, CausalDistillError, DegenerateFeatureError,
                     DegenerateLabelsError, GenerationFailedError, InputError,
                     TrainingDivergedError)
from .metrics import (ClassificationMetrics, ConfusionCounts, EffectReport, ScreenReport,
                      TestResult, ate_error, chi_square_test, confusion_metrics,
                      mate_error, significance_screen, welch_t_test)
from .nn import GroupedNet, Head, TrainConfig, forward, group_lasso_prox, group_norms, loss_and_grad, train
from .outcome import OutcomeFit, fit_outcome, predict_outcome
from .pipeline import DistillResult, EndToEndReport, PipelineConfig, apply_maps, distill_dataset, run_end_to_end
from .propensity import (AdaptiveWeights, MixtureDensityParams, PropensityFit,
                         adaptive_weights, fit_propensity, mdn_nll, mdn_pdf,
                         propensity_representation, propensity_score)
from .risk import RiskClassifier, fit_risk_classifier, predict_risk
from .synth import (BayesNet, DoseResponseBenchmark, Node, RoleLabeledSpec,
                    dose_response_benchmark, generate_risk_dataset, hidden_variable_pair,
                    random_dag, role_labeled_benchmark, sample_bayes_net)

__version__ = "0.1.0"
