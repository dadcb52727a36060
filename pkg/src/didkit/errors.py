"""Exception hierarchy shared by every pipeline stage."""


class DidError(Exception):
    """Base class; the CLI maps these to exit code 1."""


# pcap ingest
class CaptureError(DidError):
    pass


class UnknownMagic(CaptureError):
    pass


class UnsupportedLinkType(CaptureError):
    pass


class TruncatedHeader(CaptureError):
    pass


class TruncatedRecord(CaptureError):
    pass


# flow assembly / context
class OutOfOrderTimestamp(DidError):
    pass


# matrix builder
class EmptyFlow(DidError):
    pass


# dataset
class SingleClassDataset(DidError):
    pass


class TooFewRecords(DidError):
    pass


class BadMagic(DidError):
    pass


class VersionMismatch(DidError):
    pass


class CorruptRecord(DidError):
    pass


class ManifestError(DidError):
    pass


class ConfigMismatch(DidError):
    pass


# nn engine
class DimensionMismatch(DidError):
    pass


class NaNLoss(DidError):
    pass


# eval
class LabelOutOfRange(DidError):
    pass
