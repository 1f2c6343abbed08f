"""Proper losses for learning from weak labels, with checks for properness and lower-boundedness."""

from . import losses, matrixcore, oracle, potentials, weaklabels
from .errors import (DimensionError, DivergenceDetected, Inconclusive, LinkFailure,
                     NonDifferentiable, NotReconstructible, WeakProperError)
from .losses import WeakLoss, backward_correct, batch_risk, dual_loss, forward_correct, make_loss
from .potentials import GLS, LogSumExp, certify_boundedness, decode, link
from .weaklabels import (ReconstructionMatrix, TransitionMatrix, ambiguity_degree, cokernel,
                         is_reconstructible, reconstruction)

__version__ = "0.1.0"
