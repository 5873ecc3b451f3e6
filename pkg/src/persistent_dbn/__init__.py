"""Exact smoothing and approximate filtering for DBNs with persistent hidden variables."""

from .errors import *  # noqa: F401,F403
from .messages import MessageVector, OpCounter
from .model import (
    ChangepointModel,
    EvidenceSet,
    NodeSpec,
    ObservationSpec,
    PrototypeNetwork,
    changepoint_transform,
    evidence_to_lambda,
    load_evidence,
    load_model,
    save_evidence,
    save_model,
    validate_prototype,
)
from .posterior import PosteriorTable, ZeroEvidenceProbability
from .inference import smooth

__version__ = "0.1.0"
