"""Explainable anomaly-detection toolkit: resampling, VAE latent features,
stacked ensembles, and model-agnostic attributions behind a config CLI."""

from .data import Dataset, FoldPlan, ScalerParams
from .ensemble import StackedEnsemble, VotingEnsemble
from .learners import Classifier, LearnerSpec
from .metrics import MetricsReport
from .resample import ResampleSpec
from .vae import TrainedVae, VaeArchitecture

__version__ = "0.1.0"

__all__ = [
    "Classifier",
    "Dataset",
    "FoldPlan",
    "LearnerSpec",
    "MetricsReport",
    "ResampleSpec",
    "ScalerParams",
    "StackedEnsemble",
    "TrainedVae",
    "VaeArchitecture",
    "VotingEnsemble",
    "__version__",
]
