"""Optimal approximate broadcasting of quantum states and correlations.

The package computes how well the correlations of a bipartite state can be
copied to many receivers by a single local channel: semidefinite programs for
the optimal fidelity, closed forms where they exist, explicit channels
(optimal cloners, measure-and-prepare maps), and the discord quantities that
govern when perfect local copying is possible.
"""

from .qmat import (
    ComplexMatrix,
    DensityMatrix,
    Permutation,
    kron,
    partial_trace,
    partial_transpose,
    permutation_operator,
    von_neumann_entropy,
    mutual_information,
    fidelity_eigen,
    maximally_entangled,
    two_qubit_schmidt,
    classical_correlated,
    product_zero_plus,
)

__version__ = "0.1.0"
