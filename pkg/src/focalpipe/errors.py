"""Domain error types shared across the pipeline stages."""


class PipelineError(Exception):
    """Base class for all domain errors raised by this package."""


class UnsupportedFormat(PipelineError):
    pass


class CorruptData(PipelineError):
    pass


class OutOfBounds(PipelineError):
    pass


class ImageTooSmall(PipelineError):
    pass


class EmptyStack(PipelineError):
    pass


class DegenerateClustering(PipelineError):
    pass


class ContourCollapsed(PipelineError):
    pass


class EmptyMask(PipelineError):
    pass


class MultipleComponents(PipelineError):
    pass


class EmptyMatrix(PipelineError):
    pass


class DimensionMismatch(PipelineError):
    pass


class TooFewCategories(PipelineError):
    pass


class CountOutOfRange(PipelineError):
    pass


class UnknownCategory(PipelineError):
    pass


class EmptyNode(PipelineError):
    pass


class UntrainedModel(PipelineError):
    pass


class MissingProfile(PipelineError):
    pass


class CategoryOverlap(PipelineError):
    pass


class TooFewSamples(PipelineError):
    pass
