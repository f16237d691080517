"""Exception types shared across the tokenization pipeline."""


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class DecodeError(PipelineError):
    """Image bytes are malformed or in an unsupported format."""


class InvalidDimension(PipelineError):
    """A width, height, or target size is out of range."""


class OutOfBounds(PipelineError):
    """A crop rectangle extends beyond its parent image."""


class InvalidNormalization(PipelineError):
    """Normalization constants are unusable (zero std, wrong arity)."""


class EmptyGridSet(PipelineError):
    """Grid selection was asked to choose from an empty set."""


class InvalidPatchSize(PipelineError):
    """Encoder patch size is not a positive pixel count."""


class DimensionMismatch(PipelineError):
    """Array shapes disagree with the configured pipeline dimensions."""


class IndivisibleGrid(PipelineError):
    """A token grid cannot be split into whole stride-sized blocks."""


class SegmentCountMismatch(PipelineError):
    """Number of supplied crop grids disagrees with the crop plan."""


class EmptyCorpus(PipelineError):
    """Corpus statistics were requested over zero records."""


class ConfigError(PipelineError):
    """Pipeline configuration is missing, malformed, or inconsistent."""


class FormatError(PipelineError):
    """A binary artifact file has a bad magic, version, or layout."""
