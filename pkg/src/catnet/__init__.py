"""Optimal cat-state protocols for estimating a linear function of qubit-sensor fields."""

from catnet.cnot import (
    compile_gates,
    disentangling_protocol,
    echoing_protocol,
    greedy_protocol,
    optimal_ordering,
    protocol_cost,
)
from catnet.core import (
    FunctionCoefficients,
    ProtocolSchedule,
    StateFamily,
    analytic_qfim,
    average_entanglement,
    minimum_entanglement_k,
    normalize,
)
from catnet.errors import CatnetError, GreedyFailure, Infeasible
from catnet.partition import optimal_partition, partition_variance
from catnet.solver import design_protocol, farkas_certificate

__version__ = "0.1.0"

__all__ = [
    "CatnetError",
    "FunctionCoefficients",
    "GreedyFailure",
    "Infeasible",
    "ProtocolSchedule",
    "StateFamily",
    "analytic_qfim",
    "average_entanglement",
    "compile_gates",
    "design_protocol",
    "disentangling_protocol",
    "echoing_protocol",
    "farkas_certificate",
    "greedy_protocol",
    "minimum_entanglement_k",
    "normalize",
    "optimal_ordering",
    "optimal_partition",
    "partition_variance",
    "protocol_cost",
    "__version__",
]
