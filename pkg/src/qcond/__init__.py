"""Quantum conditional probabilities, conditional entropies and their verification."""
from .channels import QuantumChannel, apply, compose, depolarizing, random_channel, unitary_channel
from .conditional import ConditionalTable, conditional_probs
from .measures import info_summary, j_conditional, mutual_information
from .states import DensityMatrix, density_from_matrix, random_density
from .verify import TrialConfig, run_suite

__version__ = "0.1.0"
