"""Multi-resolution image crop tokenizer with mean-pooled token aggregation.

Any-resolution images are resized into low/medium/high targets, cut into
encoder-sized crops, encoded into token grids, projected into the language
dimension, pooled, and assembled into one fixed-budget token sequence.
"""

__version__ = "0.1.0"

from .aggregator import (
    ImageToken,
    Segment,
    Separator,
    TokenBudget,
    TokenSequence,
    assemble_sequence,
    mean_pool,
    read_token_file,
    token_budget,
    token_file_bytes,
    tokenize_image,
    write_token_file,
)
from .analytics import (
    ZoomRecord,
    ZoomStats,
    corpus_zoom_stats,
    emit_cdf,
    read_corpus_manifest,
    zoom_record,
)
from .encoder import (
    CropEncoder,
    ProjectionMap,
    TokenGrid,
    encode_crop,
    make_reference_encoder,
    project,
)
from .errors import (
    ConfigError,
    DecodeError,
    DimensionMismatch,
    EmptyCorpus,
    EmptyGridSet,
    FormatError,
    IndivisibleGrid,
    InvalidDimension,
    InvalidNormalization,
    InvalidPatchSize,
    OutOfBounds,
    PipelineError,
    SegmentCountMismatch,
)
from .gridplan import (
    CropPlan,
    GridSpec,
    PipelineConfig,
    plan_crops,
    select_grid,
    zoom_ratio,
)
from .imaging import (
    CropRect,
    ImageBuffer,
    PixelTensor,
    decode_image,
    denormalize,
    encode_fixture,
    extract_tile,
    normalize,
    resize,
)

__all__ = [
    "__version__",
    "ConfigError",
    "CropEncoder",
    "CropPlan",
    "CropRect",
    "DecodeError",
    "DimensionMismatch",
    "EmptyCorpus",
    "EmptyGridSet",
    "FormatError",
    "GridSpec",
    "ImageBuffer",
    "ImageToken",
    "IndivisibleGrid",
    "InvalidDimension",
    "InvalidNormalization",
    "InvalidPatchSize",
    "OutOfBounds",
    "PipelineConfig",
    "PipelineError",
    "PixelTensor",
    "ProjectionMap",
    "Segment",
    "SegmentCountMismatch",
    "Separator",
    "TokenBudget",
    "TokenGrid",
    "TokenSequence",
    "ZoomRecord",
    "ZoomStats",
    "assemble_sequence",
    "corpus_zoom_stats",
    "decode_image",
    "denormalize",
    "emit_cdf",
    "encode_crop",
    "encode_fixture",
    "extract_tile",
    "make_reference_encoder",
    "mean_pool",
    "normalize",
    "plan_crops",
    "project",
    "read_corpus_manifest",
    "read_token_file",
    "resize",
    "select_grid",
    "token_budget",
    "token_file_bytes",
    "tokenize_image",
    "write_token_file",
    "zoom_ratio",
    "zoom_record",
]
