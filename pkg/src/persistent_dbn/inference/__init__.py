from .engine import FactorGraph, MessageSchedule, PassWorkspace, smooth
from .kernels import (
    chain_lambda_summands,
    chain_pi_summands,
    combine_node_lambda,
    lambda_chain_message,
    leaf_likelihood_vector,
    pi_chain_message,
    pi_to_child_message,
    polytree_lambda_message,
    polytree_pi_message,
    root_prior,
)
from .nonpersistent import (
    HubFactor,
    hub_slice_marginals,
    kappa_changepoint_log,
    kappa_table,
    nonpersistent_node_sumout,
)

__all__ = [
    "FactorGraph",
    "HubFactor",
    "MessageSchedule",
    "PassWorkspace",
    "chain_lambda_summands",
    "chain_pi_summands",
    "combine_node_lambda",
    "hub_slice_marginals",
    "kappa_changepoint_log",
    "kappa_table",
    "lambda_chain_message",
    "leaf_likelihood_vector",
    "nonpersistent_node_sumout",
    "pi_chain_message",
    "pi_to_child_message",
    "polytree_lambda_message",
    "polytree_pi_message",
    "root_prior",
    "smooth",
]
