"""Citation-score labeling pipeline and chunked-embedding GRU regressor.

The package has two halves.  The data half streams scholarly-corpus JSON
dumps into an indexed article store, resolves (title, authors) queries,
and computes year-windowed log citation scores.  The model half chunks
document text, represents each chunk as a fixed-size vector, and trains a
GRU + dropout + linear head to predict the citation score, evaluated with
MSE, MAE, and R^2.
"""

from .chunks import (
    Chunk,
    ChunkEmbeddings,
    TokenSequence,
    chunk,
    mean_pool,
    pseudo_embed,
    read_embeddings,
    tokenize,
    write_embeddings,
)
from .datasets import (
    CorpusStats,
    DatasetManifest,
    cap_chunks,
    corpus_stats,
    split,
    subsample,
)
from .errors import (
    DegenerateLabels,
    FormatError,
    InvalidInput,
    MalformedLine,
    MissingYear,
    ParseFailure,
    SchubertError,
    StorageFailure,
)
from .harvest import PaperLink, extract_paper_links, extract_venue_links
from .regressor import (
    GruParams,
    Metrics,
    TrainConfig,
    TrainResult,
    adam_step,
    backward,
    evaluate,
    forward,
    init_params,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .resolve import (
    ArticleQuery,
    CitationLabel,
    YearGroupedCitations,
    citation_score,
    compute_year_grouped_citations,
    find_citations_for_article,
    is_eligible,
    label_article,
    windowed_citation_count,
)
from .store import ArticleRecord, CorpusStore, build_store, parse_record

__version__ = "0.1.0"

__all__ = [
    "ArticleQuery",
    "ArticleRecord",
    "Chunk",
    "ChunkEmbeddings",
    "CitationLabel",
    "CorpusStats",
    "CorpusStore",
    "DatasetManifest",
    "DegenerateLabels",
    "FormatError",
    "GruParams",
    "InvalidInput",
    "MalformedLine",
    "Metrics",
    "MissingYear",
    "PaperLink",
    "ParseFailure",
    "SchubertError",
    "StorageFailure",
    "TokenSequence",
    "TrainConfig",
    "TrainResult",
    "YearGroupedCitations",
    "adam_step",
    "backward",
    "build_store",
    "cap_chunks",
    "chunk",
    "citation_score",
    "compute_year_grouped_citations",
    "corpus_stats",
    "evaluate",
    "extract_paper_links",
    "extract_venue_links",
    "find_citations_for_article",
    "forward",
    "init_params",
    "is_eligible",
    "label_article",
    "load_checkpoint",
    "mean_pool",
    "parse_record",
    "pseudo_embed",
    "read_embeddings",
    "save_checkpoint",
    "split",
    "subsample",
    "tokenize",
    "train",
    "windowed_citation_count",
    "write_embeddings",
]
