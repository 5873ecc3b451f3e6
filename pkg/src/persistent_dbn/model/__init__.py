from .evidence import EvidenceSet, check_evidence, evidence_to_lambda
from .io import (
    dumps_model,
    evidence_from_list,
    evidence_to_list,
    load_evidence,
    load_model,
    network_from_dict,
    network_to_dict,
    save_evidence,
    save_model,
)
from .network import NodeSpec, ObservationSpec, PrototypeNetwork, ValidationReport, bit_keys, validate_prototype
from .transform import (
    ChangepointModel,
    changepoint_from_sequence,
    changepoint_transform,
    sequence_from_changepoint,
)

__all__ = [
    "ChangepointModel",
    "EvidenceSet",
    "NodeSpec",
    "ObservationSpec",
    "PrototypeNetwork",
    "ValidationReport",
    "bit_keys",
    "changepoint_from_sequence",
    "changepoint_transform",
    "check_evidence",
    "dumps_model",
    "evidence_from_list",
    "evidence_to_lambda",
    "evidence_to_list",
    "load_evidence",
    "load_model",
    "network_from_dict",
    "network_to_dict",
    "save_evidence",
    "save_model",
    "sequence_from_changepoint",
    "validate_prototype",
]
