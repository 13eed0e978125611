"""Triple feature propagation (TFP) decoding for knowledge-graph entity alignment."""

from .alignment import (
    Assignment,
    SimilarityMatrix,
    cosine_sim,
    csls,
    exact_assignment,
    greedy_match,
    pad_square,
    sinkhorn,
    sinkhorn_match,
)
from .decoder import (
    DecodeConfig,
    JointIndex,
    TripleTensor,
    build_triple_slices,
    concat_history,
    decode,
    final_features,
    propagate_step,
    random_projection,
    run_propagation,
    triple_features,
)
from .energy import dirichlet_energy, homophily
from .flow import SeedMask, direct_solve, euler_step, iterate_fp
from .kg import (
    DatasetPair,
    KnowledgeGraph,
    SeedAlignment,
    load_dataset,
    load_embeddings,
    load_pairs,
    load_triples,
    write_dataset,
    write_embeddings,
    write_pairs,
    write_triples,
)
from .metrics import hits_at_k, mrr, ranks
from .sparse import SparseMatrix, concat_columns, l2_normalize_rows, row_normalize, spmm, sym_normalize
from .synth import generate_kg, make_pair
from .views import (
    build_distal,
    build_integral,
    build_laplacian,
    build_proximal,
    build_tri_rel,
    build_views,
    undirected_adjacency,
)

__version__ = "0.1.0"
