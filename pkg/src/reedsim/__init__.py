"""Noncoherent paired-energy over-the-air aggregation.

Simulator, exact moment laws and a federated-averaging harness for signed
aggregation via energy differences over paired resource elements.
"""

from .streams import StreamKey
from .estimator import (PairedEnergies, ReedPhyConfig, ScalarInputs,
                        aggregate_coherent_csit, aggregate_ideal, aggregate_reed,
                        encode_branch_symbol, reed_estimate_chip,
                        reed_estimate_single, sample_estimates,
                        simulate_paired_observation)
from .moments import (ConvergenceConstants, MomentReport, energy_audit,
                      eta_schedule, sigma_air_bound, theorem_bound_rhs,
                      variance_chip, variance_single, variance_single_kappa)
from .fedavg import (FedRunConfig, Objective, RoundTrace, build_objective,
                     local_round, run_fedavg)
from .datasets import (LabeledDataset, PartitionSpec, parse_idx, partition,
                       synth_dataset, write_idx)

__all__ = [
    "StreamKey",
    "ScalarInputs", "ReedPhyConfig", "PairedEnergies",
    "encode_branch_symbol", "simulate_paired_observation", "sample_estimates",
    "reed_estimate_single", "reed_estimate_chip",
    "aggregate_ideal", "aggregate_reed", "aggregate_coherent_csit",
    "MomentReport", "ConvergenceConstants",
    "variance_single", "variance_single_kappa", "variance_chip",
    "sigma_air_bound", "eta_schedule", "energy_audit", "theorem_bound_rhs",
    "Objective", "FedRunConfig", "RoundTrace", "build_objective",
    "local_round", "run_fedavg",
    "LabeledDataset", "PartitionSpec", "parse_idx", "write_idx",
    "partition", "synth_dataset",
]
