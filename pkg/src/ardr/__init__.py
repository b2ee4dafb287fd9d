"""Attraction/repulsion dimensionality reduction.

Classical spectral methods (PCA, classical MDS, Isomap, LLE) recovered by
gradient descent, the double-kernel objectives DK-PCA and DK-LLE, UMAP's
full-batch and sampled optimizers, and the oracles and metrics used to
compare them.
"""

from .engine import RunConfig, RunResult, descend, lowrank_pca_gradient, umap_effective_optimize
from .experiment import ExperimentConfig, compare, execute, run_experiment
from .kernels import CAUCHY, LINEAR, InputKernelSpec, OutputKernel, input_kernel_matrix
from .neighbors import affinity_weights, knn_graph, lle_weights, m_matrix
from .objectives import DKLLEScheme, DKPCAScheme, PCAScheme, UMAPIntendedScheme
from .oracles import cmds_oracle, lle_oracle, pca_oracle

__version__ = "0.1.0"
