"""Community structure induced by conservative and non-conservative opinion flows."""

__version__ = "0.1.0"

from .graph import (  # noqa: E402
    EdgeListError,
    Graph,
    NodeAttributes,
    NodeItemSets,
    connected_components,
    degree,
    largest_component,
    load_edge_list,
    load_item_sets,
    load_node_attributes,
    write_edge_list,
)
from .operators import (  # noqa: E402
    ConvergenceError,
    Laplacian,
    PerronPair,
    Replicator,
    SpectralSummary,
    apply_operator,
    canonical_replicator,
    community_count_signature,
    largest_adjacency_eigenpair,
    smallest_eigenvalues,
)
from .dynamics import (  # noqa: E402
    InstabilityError,
    OpinionState,
    Regime,
    SimulationConfig,
    SteadyState,
    TrajectoryBundle,
    alpha_regime,
    exact_evolution,
    init_opinions,
    simulate,
    steady_state,
    step_euler,
)
from .communities import (  # noqa: E402
    EdgeSimilarity,
    MultiScaleReport,
    Partition,
    core_whiskers,
    edge_similarity,
    multiscale_sweep,
    threshold_partition,
)
from .analysis import (  # noqa: E402
    CohesivenessScore,
    CoreOverlap,
    attribute_cohesiveness,
    core_overlap,
    covote_cohesiveness,
    scale_summary,
)
from .kernels import BACKEND  # noqa: E402
