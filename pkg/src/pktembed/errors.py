"""Exception hierarchy.

Every failure raised by the package derives from :class:`PktEmbedError`.
The three intermediate classes map onto CLI exit codes: :class:`UsageError`
(1), :class:`DataError` (2) and :class:`NumericError` (3).
"""


class PktEmbedError(Exception):
    """Base class for all package errors."""


class UsageError(PktEmbedError, ValueError):
    """Caller passed arguments that violate a precondition."""


class DataError(PktEmbedError, ValueError):
    """Input data could not be parsed or is inconsistent."""


class NumericError(PktEmbedError, ArithmeticError):
    """A non-finite value was produced or encountered."""


# pcap
class PcapError(DataError):
    pass


class UnknownMagic(PcapError):
    pass


class UnsupportedVersion(PcapError):
    pass


class TruncatedHeader(PcapError):
    pass


class TruncatedRecord(PcapError):
    pass


class RecordTooLarge(PcapError):
    pass


# label table
class MalformedRow(DataError):
    pass


class OverlappingInterval(DataError):
    pass


# tokenizer
class OddLengthHex(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class LabelContainsWhitespace(DataError):
    pass


# embedding core
class NoLabels(UsageError):
    pass


class EmptyDocument(DataError):
    pass


class NotSupervised(UsageError):
    pass


class OutOfVocabulary(DataError, KeyError):
    pass


class DimMismatch(DataError):
    pass


# svm
class EmptyDataset(DataError):
    pass


class NonpositiveLambda(UsageError):
    pass


# evaluation
class UnknownDay(DataError):
    pass


class EmptyPartition(DataError):
    pass


class UnknownLabel(DataError):
    pass


# model container
class ContainerError(DataError):
    pass


class BadMagic(ContainerError):
    pass


class VersionUnsupported(ContainerError):
    pass


class CorruptSection(ContainerError):
    pass


class NonFiniteValue(NumericError):
    pass


class IoFailure(PktEmbedError, OSError):
    pass
