"""Exception hierarchy shared across the package.

Every domain failure maps to one class here so that the CLI and the HTTP
layer can translate exceptions into exit codes / status codes uniformly.
"""


class VecprobeError(Exception):
    """Base class for all domain errors."""

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__

    @property
    def code(self) -> str:
        """Stable snake_case error code, e.g. ``TooManySnapshots -> too_many_snapshots``."""
        name = self.__class__.__name__
        return "".join("_" + c.lower() if c.isupper() else c for c in name).lstrip("_")


# --- embedding IO ---------------------------------------------------------

class EmbeddingIOError(VecprobeError):
    pass


class EmptyInput(EmbeddingIOError):
    pass


class DimensionConflict(EmbeddingIOError):
    pass


class MissingManifest(EmbeddingIOError):
    pass


class MalformedManifest(EmbeddingIOError):
    pass


class DuplicateLayerName(EmbeddingIOError):
    pass


class DanglingPayloadRef(EmbeddingIOError):
    pass


class UnknownLayer(EmbeddingIOError):
    pass


# --- probing data ---------------------------------------------------------

class DataError(VecprobeError):
    pass


class UnknownTaskKind(DataError):
    pass


class EmptyRegistry(DataError):
    pass


class UnknownLanguage(DataError):
    pass


class MissingSplit(DataError):
    pass


class MalformedRow(DataError):
    pass


class SingleClassDataset(DataError):
    pass


class EmptyAfterFiltering(DataError):
    pass


class InvalidSpec(DataError):
    pass


# --- classifier -----------------------------------------------------------

class ClassifierError(VecprobeError):
    pass


class DimMismatch(ClassifierError):
    pass


class BadLabelIndex(ClassifierError):
    pass


class OOVToken(ClassifierError):
    pass


class EmptySplit(ClassifierError):
    pass


# --- probe planning / execution -------------------------------------------

class PlanError(VecprobeError):
    pass


class UnknownTask(PlanError):
    pass


class TooManySnapshots(PlanError):
    pass


class NoSnapshots(PlanError):
    pass


class LayerRequiredForBundle(PlanError):
    pass


class MixedDimensions(PlanError):
    pass


class JobFailed(VecprobeError):
    pass


# --- service --------------------------------------------------------------

class ServiceError(VecprobeError):
    pass


class UnrecognizedFormat(ServiceError):
    pass


class StorageFull(ServiceError):
    pass


class UnknownUpload(ServiceError):
    pass


class UnknownJob(ServiceError):
    pass


class UnknownToken(ServiceError):
    pass


class JobNotFinished(ServiceError):
    pass
