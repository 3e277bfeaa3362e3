"""Local virtual node toolkit: augmentation, connectivity metrics, from-scratch GCN."""

__version__ = "0.1.0"

from .graph import (
    Graph,
    GraphConstructionError,
    NodeSubset,
    build_graph,
    connected_components,
    induced_subgraph,
    symmetrize,
)
from .datasets import (
    DatasetFormatError,
    GraphDataset,
    SplitSpec,
    inject_constant_feature,
    load_node_dataset,
    load_tudataset,
    make_splits,
)
from .centrality import (
    CentralityMethod,
    CentralityScores,
    CentralSelection,
    degree_centrality,
    labelprop_select,
    pagerank,
    select_central,
)
from .augment import (
    AugmentedGraph,
    EdgeMode,
    VirtualNodeRecord,
    gvn_augment,
    identity_augment,
    lvn_augment,
    readout_groups,
)
from .spectral import (
    DisconnectedPairError,
    LaplacianSpectrum,
    NumericalError,
    PathDeltaCurve,
    ResistanceReport,
    effective_resistance,
    laplacian_eigendecomposition,
    path_count_delta,
    resistance_sweep,
    total_resistance_subset,
)
from .nn import (
    AdamState,
    EmbedMode,
    ModelParams,
    ShiftOperator,
    adam_step,
    backward,
    build_shift_operator,
    cross_entropy,
    gcn_forward,
    init_features,
    init_model_params,
    mlp_probe_forward,
    readout_graph,
    readout_node,
)
from .harness import (
    ExperimentConfig,
    ProbeResult,
    RunResult,
    Task,
    embedding_similarity,
    run_connectivity_suite,
    run_mlp_probe,
    run_training,
    track_embedding_drift,
)

__all__ = [name for name in dir() if not name.startswith("_")]
