"""Semi-automatic misconception discovery from student turtle programs.

Pipeline: parse and grade a corpus of turtle-graphics programs, train an
attention classifier over AST path contexts to predict overall success,
extract the pre-attention context embeddings, and cluster the failing
submissions of each rubric item (t-SNE then DBSCAN) into candidate
misconception groups with normalized embedding/tree-edit dispersion metrics
and SVG reports.
"""

from .clustering import ClusterConfig, dbscan, select_epsilon
from .corpus import Corpus, Submission, load_corpus, save_corpus
from .discover import (
    ClusterReport,
    cluster_metrics,
    discover_per_rubric,
    extract_embeddings,
    run_discovery,
)
from .evaluation import MetricRow, SplitSpec, binary_metrics, resample_split, run_comparison
from .generator import GeneratorSpec, generate
from .nnet import (
    Code2VecParams,
    TrainConfig,
    TrainedModel,
    adam_step,
    forward,
    loss_and_gradients,
    majority_baseline,
    train_code2vec,
    train_fc_nn,
    train_linear_svm,
)
from .pathctx import (
    EncodedSubmission,
    PathContext,
    Vocab,
    build_vocab,
    encode,
    encode_corpus,
    extract_paths,
    tfidf_features,
)
from .treedist import ted_matrix, tree_edit_distance
from .tsne import Projection2D, tsne
from .turtlelang import (
    Ast,
    AstNode,
    RubricScore,
    RUBRIC_ITEMS,
    from_portable,
    grade_rubric,
    parse,
    to_portable,
)

__version__ = "0.1.0"
