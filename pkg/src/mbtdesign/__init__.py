"""Measurement-based single-qubit t-designs on linear cluster states.

Simulates cluster-state measurement chains, reconstructs the realised
channels by process tomography, and tests whether the resulting ensembles
are epsilon-approximate t-designs under ideal and noisy conditions.
"""

from .cluster import build_linear_cluster, logical_unitary, measure_chain, sample_counts
from .design import (
    APPROX_2_ANGLES,
    EXACT_3_ANGLES,
    UnitaryEnsemble,
    approx_two_design,
    design_test,
    ensemble_from_angles,
    exact_three_design,
    haar_moment,
    passing_fraction,
    truncation_radius_search,
)
from .errors import ConfigError, MBDesignError, NumericalError
from .identity import identity_bench, infer_p, pauli_correction
from .kernels import BACKEND
from .noise import (
    ConfusionModel,
    calibration_matrix,
    epsilon_vs_p_sweep,
    mitigate,
    noisy_ensemble,
    noisy_ensemble_stepwise,
    noisy_ensemble_terminal,
)
from .tomography import channel_fidelity, chi_from_probe_outputs, chi_of_unitary, state_tomography

__version__ = "0.1.0"
