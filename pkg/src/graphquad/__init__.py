"""Quadrature rules on weighted graphs.

Pick sampling vertices, weigh them by heat-ball packing or spectral least
squares, and bound the integration error of band-limited functions.
"""

__version__ = "0.1.0"

from .graph import (  # noqa: E402
    DiffusionOperator,
    GraphError,
    WeightedGraph,
    apply_propagator,
    apply_propagator_power,
    d_max,
    from_adjacency,
    from_edge_list,
    is_connected,
)
from .spectral import (  # noqa: E402
    ConvergenceError,
    Spectrum,
    XLambdaSpace,
    eigendecompose,
    top_k_eigenpairs,
    x_lambda_norm,
    x_lambda_project,
    x_lambda_space,
)
from .heatball import (  # noqa: E402
    GramMatrix,
    best_ell,
    energy,
    gram_matrix,
    theorem_bound,
)
from .weights import (  # noqa: E402
    QuadratureRule,
    kkt_residual,
    optimize_weights_qp,
    optimize_weights_spectral,
    project_to_simplex,
)
from .placement import (  # noqa: E402
    DistanceOracle,
    local_search_placement,
    sssp,
    total_mutual_distance,
)
from .builders import (  # noqa: E402
    PointCloud,
    gaussian_clusters,
    gen_family,
    gen_mcgee,
    knn_gaussian_graph,
)
from .evaluation import (  # noqa: E402
    ExperimentResult,
    design_strength,
    integrate,
    integration_error,
    random_baseline,
    sharpness_check,
    sweep_dimension,
    sweep_ell,
)
