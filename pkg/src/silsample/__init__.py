"""silsample: silhouette-guided class imbalancing and Gaussian-rejection rebalancing."""

__version__ = "0.1.0"

from silsample.data import (
    ClassCounts,
    ClassSpec,
    ClusterSpec,
    DataInvariantError,
    Dataset,
    FeatureStats,
    SplitSpec,
    class_counts,
    concat_datasets,
    feature_stats,
    imbalance_degree,
    load_csv,
    make_synthetic_dataset,
    min_max_scale,
    save_csv,
    split,
    weighted_feature_stats,
)
from silsample.evaluate import (
    CorrelationMatrix,
    KFoldResult,
    MetricsReport,
    MlpConfig,
    MlpModel,
    TrainingDivergedError,
    TrainingTrace,
    classification_metrics,
    evaluate_split,
    kfold_cv,
    mean_metrics,
    mlp_evaluator,
    mlp_predict,
    mlp_predict_batch,
    mlp_train,
    pearson_matrix,
    roc_points_and_auc,
)
from silsample.neighbors import (
    NeighborIndex,
    euclidean_distance,
    kneighbors,
    knn_classify,
    nn1_classify,
)
from silsample.oversample import (
    ALGORITHMS,
    AdasynAllocation,
    GenerationBudgetError,
    GrngSpec,
    SyntheticBatch,
    adasyn,
    adasyn_allocation,
    g1no,
    g1no_gourmet,
    grng,
    rebalance,
    smote,
)
from silsample.silhouette import (
    GourmetWeights,
    SilhouetteReport,
    gourmet_weights,
    inter_dissimilarity,
    intra_dissimilarity,
    silhouette_coefficient,
    silhouette_report,
    silhouette_values,
)
from silsample.undersample import (
    ASCENDING,
    DESCENDING,
    RANDOM,
    RemovalPlan,
    SweepResult,
    cross_validated_sweep,
    default_acceptability,
    idft_sweep,
    remove_fraction,
)

__all__ = [name for name in dir() if not name.startswith("_")]
