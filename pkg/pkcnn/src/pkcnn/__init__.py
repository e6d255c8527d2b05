"""Residual CNN correcting kinetic maps fitted from undersampled acquisitions."""

from .loss import loss_terms, physical_model_loss
from .network import NetworkConfig, ResidualMapNet, build_network, receptive_field
from .physics import FrameVif, PhysicsContext, signal_forward
from .train import TrainResult, load_checkpoint, train

__all__ = [
    "NetworkConfig",
    "ResidualMapNet",
    "build_network",
    "receptive_field",
    "FrameVif",
    "PhysicsContext",
    "signal_forward",
    "loss_terms",
    "physical_model_loss",
    "TrainResult",
    "train",
    "load_checkpoint",
]

__version__ = "0.1.0"
