"""simpeval: desk-scale evaluation toolkit for biomedical plain-language
simplification pipelines."""

from .corpus import (
    DepParse,
    RankTable,
    SentencePair,
    SplitSet,
    TokenEmbeddings,
    load_conllu,
    load_corpus,
    load_embeddings,
    load_frequency_list,
    make_splits,
    save_corpus,
    tokenize,
)
from .control_tokens import (
    CtVector,
    annotate,
    dep_tree_depth_ratio,
    length_ratio,
    prepare_training_set,
    quantize,
    replace_only_levenshtein,
    word_rank_ratio,
)
from .ct_search import (
    CommandGenerator,
    CtGrid,
    HttpGenerator,
    LrPredictor,
    MockGenerator,
    apply_best,
    fit_lr_predictor,
    grid_search,
    predict_lr,
)
from .human_eval import (
    AnnotationRecord,
    AssignmentPlan,
    EvalItem,
    assign,
    cohen_kappa,
    derive_wlt,
    krippendorff_alpha,
    sample_items,
    summarize,
)
from .metrics import MetricReport, bleu, corpus_sari, embedding_f, rouge, sari
from .reporting import EvalConfig, RunRecord, evaluate_run, learning_curve, select_models

__version__ = "0.1.0"
