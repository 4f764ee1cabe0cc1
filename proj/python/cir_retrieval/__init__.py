"""Zero-shot composed image retrieval: curation, training and retrieval."""

from ._core import (
    CaptionRecord,
    DivergenceError,
    Encoder,
    Error,
    EvalCase,
    FormatError,
    ImageRecord,
    Index,
    IoError,
    Retriever,
    TripletRecord,
    ValidationError,
    __version__,
    curate_template,
    fuse,
    grad_check,
    info_nce,
    load_features,
    map_at_k,
    maxsim,
    modes,
    random_encoder,
    rank_scores,
    recall_at_k,
    run_cli,
    save_features,
    similarity_matrix,
    subset_recall_at_k,
    synth_corpus,
    tokenize,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
