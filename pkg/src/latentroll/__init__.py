"""latentroll: adversarial autoencoder for multitrack MIDI phrases with a
genre-conditioned ring-of-Gaussians latent prior."""

__version__ = "0.1.0"

from .model import DESK_PROFILE, AdversarialAutoencoder, ModelConfig, build_model
from .pipeline import PreprocessConfig, build_dataset, load_dataset
from .prior import GenreRingPrior, IsotropicGaussianPrior
from .training import TrainConfig, train

__all__ = [
    "DESK_PROFILE",
    "AdversarialAutoencoder",
    "ModelConfig",
    "build_model",
    "PreprocessConfig",
    "build_dataset",
    "load_dataset",
    "GenreRingPrior",
    "IsotropicGaussianPrior",
    "TrainConfig",
    "train",
]
