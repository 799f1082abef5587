"""Exception hierarchy.  Every error raised on purpose derives from ProtoclustError."""


class ProtoclustError(Exception):
    pass


# trace ingest
class PcapError(ProtoclustError):
    pass


class UnknownMagic(PcapError):
    pass


class TruncatedRecord(PcapError):
    pass


class UnsupportedLinkType(PcapError):
    pass


class MessagesFileError(ProtoclustError):
    pass


class LabelError(ProtoclustError):
    pass


class IndexOutOfRange(LabelError):
    pass


class DuplicateIndex(LabelError):
    pass


# preprocessing / clustering
class RangeExceedsCorpus(ProtoclustError):
    pass


class AllColumnsDropped(ProtoclustError):
    pass


class TooFewMessages(ProtoclustError):
    pass


# validation
class LengthMismatch(ProtoclustError):
    pass


# effects
class GroupTooSmall(ProtoclustError):
    pass


class ZeroPooledVariance(ProtoclustError):
    pass


class InsufficientValues(ProtoclustError):
    pass


# sweep
class PlanError(ProtoclustError):
    pass


class NoDefinedScores(ProtoclustError):
    pass


class NoLabels(ProtoclustError):
    pass
