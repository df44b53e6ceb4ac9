"""Directed-connectivity brain graphs, node-graph contrastive pretraining,
and a top-k graph-attention classifier for ictal/interictal detection."""

__version__ = "0.1.0"

from .biomarkers import FEATURE_NAMES, NodeFeatureMatrix, node_feature_matrix
from .connectivity import (
    ConnectivityMatrix,
    FrequencyBand,
    MvarModel,
    band_dtf,
    default_bands,
    fit_mvar,
    multiband_graph,
    threshold_top_quartile,
    transfer_matrix,
)
from .contrastive import (
    LossTrace,
    PretrainConfig,
    SpectralSignature,
    blended_similarity,
    global_similarity,
    graph_contrastive_loss,
    infograph_loss,
    laplacian_spectrum,
    local_similarity,
    pretrain,
    total_loss,
)
from .encoder import GraphEncoder, init_encoder
from .evaluation import (
    ConfusionCounts,
    CvResult,
    FoldReport,
    confusion_metrics,
    cross_validate,
    kfold_split,
    roc_auc,
)
from .gatclassifier import (
    AttentionMap,
    GatConfig,
    TopKGat,
    finetune,
    neighbor_count,
    predict,
    predict_batch,
    topk_mask,
)
from .graphbuild import (
    AugmentationPolicy,
    BrainGraph,
    augment,
    build_graph,
    degree_centrality,
    mask_nodes,
    normalize_importance,
    perturb_edges,
)
from .signalio import (
    Recording,
    Segment,
    clip_peri_ictal,
    load_recording,
    save_recording,
    segment_windows,
    synth_var_recording,
)
