"""Exception hierarchy.

Every error raised by the library derives from :class:`ProteoTaskgenError` so
callers (the CLI in particular) can map whole families onto exit codes.
"""


class ProteoTaskgenError(Exception):
    """Base class for all library errors."""


# -- structure_io -----------------------------------------------------------

class StructureError(ProteoTaskgenError):
    pass


class ParseError(StructureError):
    """Malformed structure, annotation or tensor file."""


class EmptyComplex(StructureError):
    """The file parsed but contained no polymer residues."""


class AnnotationError(StructureError):
    pass


class UnknownChain(AnnotationError):
    pass


class OutOfRange(AnnotationError):
    pass


class OverlappingLoops(AnnotationError):
    pass


# -- geometry_labels ----------------------------------------------------------

class LabelError(ProteoTaskgenError):
    pass


class MissingReferenceAtom(LabelError):
    """Residue has no C-beta (C-alpha for glycine)."""


class NoChainPairs(LabelError):
    pass


# -- task_corpus --------------------------------------------------------------

class TaskError(ProteoTaskgenError):
    pass


class TaskNotApplicable(TaskError):
    pass


class MissingAnnotation(TaskError):
    pass


class EmptyBufferWithReplay(TaskError):
    pass


# -- anchor_interface ---------------------------------------------------------

class AnchorError(ProteoTaskgenError):
    pass


class DimMismatch(AnchorError):
    pass


class KeyOutsideCdr(AnchorError):
    pass


class MissingHidden(AnchorError):
    pass


class MissingIdentity(AnchorError):
    pass


# -- grading / evaluation -----------------------------------------------------

class EmptyResults(ProteoTaskgenError):
    pass


class MetricError(ProteoTaskgenError):
    pass


class EmptyGroundTruth(MetricError):
    pass


class EmptyRegion(MetricError):
    pass


class TooFewPoints(MetricError):
    pass


class InsufficientBackbone(MetricError):
    pass


class JoinError(ProteoTaskgenError):
    """Model outputs and corpus records do not pair up."""


# -- cli ------------------------------------------------------------------------

class ConfigError(ProteoTaskgenError):
    pass
