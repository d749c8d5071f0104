"""corpusmatch: attribute-controlled comparison corpora for document
collections with sparse categorical metadata.

Pipeline: ingest a corpus, tag target groups, greedily match every target
document to its closest candidate by category overlap (several weighting
schemes, including pivoted TF-IDF), then evaluate match quality and compute
controlled disparity statistics between the matched groups.
"""

from .corpus import (
    Article,
    Corpus,
    CorpusSummary,
    FilterPolicy,
    SyntheticSpec,
    corpus_summary,
    generate_synthetic,
    ingest,
    save_corpus,
)
from .errors import ConfigError, CorpusMatchError, DataError, NumericError
from .evaluate import (
    EvaluationReport,
    evaluate_battery,
    kl_divergence,
    polar_log_odds,
    smd_binary,
    smd_continuous,
    smd_report,
    topic_kl,
)
from .lda import LdaModel, train_lda
from .matchers import (
    MatchConfig,
    MatchedPair,
    MatchResult,
    apply_exclusions,
    greedy_match,
    score_number,
    score_percent,
    score_pivot_slope,
    score_tfidf,
)
from .propensity import (
    LogRegModel,
    PropensityScores,
    TrainingMeta,
    discard_weak_propensity,
    greedy_match_propensity,
    train,
)
from .simulate import (
    LdaParams,
    SimulationSpec,
    TuneSpec,
    run_article_sampling,
    run_attribute_specific,
    run_category_sampling,
    tune_slope,
)
from .stats import TestResult, benjamini_hochberg, mcnemar, paired_t, welch_t
from .vectorize import (
    IdfTable,
    PivotSlopeParams,
    SparseVector,
    build_idf,
    export_matrix,
    mean_category_count,
    pivoted_norm,
    tfidf_vector,
)

__version__ = "0.1.0"
