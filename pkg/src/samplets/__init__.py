"""Samplet bases on scattered data and their continuous multiwavelet limits."""
from .cluster_tree import Cluster, ClusterTree, build_tree
from .errors import (ConfigError, DegenerateConfigurationError, DegenerateLeafError,
                     DimensionError, EmptyClusterError, GeometryError, IndexSetError,
                     SampletError, TreeMismatchError, UnderResolvedLeafError,
                     UnsupportedDimensionError)
from .geometry import Cell, Frame
from .index_sets import (IndexSet, custom_set, graded_lex_compare, parse_index_set,
                         tensor_set, total_degree_set, validate_downward_closed)
from .multiwavelet import (BrokenPolynomial, DetailBasis, Reflection, cell_orthonormal,
                           coarsen, continuous_moment_matrix, filter_scale_independence,
                           limit_compare, project_function, symmetrize_parity)
from .ortho_poly import (GramMatrix, PolynomialFamily, continuous_gram, empirical_gram,
                         eval_family, family_sup_distance, monic_orthogonalize, orthonormalize)
from .samplet_transform import (ClusterFilters, MomentMatrix, SampletBasis, build_basis,
                                samplet_basis)
from .sampling import PointSet, halton, sample_uniform, star_discrepancy_1d

__version__ = "0.1.0"
