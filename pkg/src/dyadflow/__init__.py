"""Bayesian composite-likelihood dyadic regression on spatio-temporal networks."""

from .errors import DomainError, DyadflowError, NumericalError
from .geometry import (CoordinateMode, Dissimilarity, DissimilarityKind,
                       dissimilarity, distance, pairwise_distances,
                       project_embedding)
from .gp import CovarianceCache, PhiSupport, build_cache, gp_simulate, krige_predict
from .network import DesignMatrix, DyadSet, build_design, build_dyads, distinct_locations
from .nodetable import Node, NodeTable, read_node_csv
from .sampler import (ParamState, PosteriorDraws, PriorConfig, SamplerConfig,
                      run_chain, run_chains)
from .scoring import ModelScore, chain_summary, crps_gaussian, score_model
from .simulate import Ar1Config, generate_ar1, generate_full_model, run_appendixA
from .surface import SurfaceGrid, estimate_surface, evaluate_potential_path, read_grid_csv
from .weights import (BasisFunction, WeightSpec, composite_weight,
                      four_weight_models, log_density, power_basis_spec,
                      total_log_likelihood)

__version__ = "0.1.0"
