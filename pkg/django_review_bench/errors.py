# -*- coding: utf-8 -*-
import enum
from typing import Optional, Tuple


class ErrorTypes(enum.IntEnum):
    MissingSlot = 1
    UnknownPhase = 2
    TransportFailure = 3
    SchemaViolation = 4
    ReplayMiss = 5
    ReconstructionMismatch = 6
    LengthMismatch = 7
    EmptyExtraction = 8
    EmptyInput = 9
    UnlocatableArgument = 10
    InsufficientData = 11
    CorpusInvalid = 12
    DuplicatePaper = 13
    EmptyCorpus = 14
    Configuration = 15
    Unexpected = 99


ErrorDescription = Tuple[ErrorTypes, str]


class ReviewBenchError(Exception):
    error_type: ErrorTypes = ErrorTypes.Unexpected

    def describe(self) -> ErrorDescription:
        return self.error_type, str(self)


class MissingSlotError(ReviewBenchError):
    error_type = ErrorTypes.MissingSlot

    def __init__(self, phase: str, slot: str):
        self.phase = phase
        self.slot = slot
        super().__init__(f"Phase '{phase}' requires a non-empty '{slot}' slot")


class UnknownPhaseError(ReviewBenchError):
    error_type = ErrorTypes.UnknownPhase


class TransportError(ReviewBenchError):
    error_type = ErrorTypes.TransportFailure

    def __init__(self, message: str, status_code: Optional[int] = None, transient: bool = True):
        self.status_code = status_code
        self.transient = transient
        super().__init__(message)


class SchemaViolation(ReviewBenchError):
    """Judge output that failed strict parsing; keeps the raw text for audit."""
    error_type = ErrorTypes.SchemaViolation

    def __init__(self, phase: str, path: str, message: str, raw_text: str):
        self.phase = phase
        self.path = path
        self.raw_text = raw_text
        super().__init__(f"{phase}: {message} at '{path or '<root>'}'")


class ReplayMissError(ReviewBenchError):
    error_type = ErrorTypes.ReplayMiss

    def __init__(self, digest: str, phase: str = ''):
        self.digest = digest
        super().__init__(f"No recorded response for {phase or 'request'} {digest}")


class ReconstructionMismatch(ReviewBenchError):
    error_type = ErrorTypes.ReconstructionMismatch


class LengthMismatch(ReviewBenchError):
    error_type = ErrorTypes.LengthMismatch


class EmptyExtractionError(ReviewBenchError):
    error_type = ErrorTypes.EmptyExtraction


class EmptyInputError(ReviewBenchError):
    error_type = ErrorTypes.EmptyInput


class UnlocatableArgument(ReviewBenchError):
    error_type = ErrorTypes.UnlocatableArgument


class InsufficientDataError(ReviewBenchError):
    error_type = ErrorTypes.InsufficientData


class CorpusError(ReviewBenchError):
    error_type = ErrorTypes.CorpusInvalid


class DuplicatePaperError(CorpusError):
    error_type = ErrorTypes.DuplicatePaper


class EmptyCorpusError(CorpusError):
    error_type = ErrorTypes.EmptyCorpus


class ConfigurationError(ReviewBenchError):
    error_type = ErrorTypes.Configuration


def describe_exception(exc: BaseException) -> ErrorDescription:
    if isinstance(exc, ReviewBenchError):
        return exc.describe()
    return ErrorTypes.Unexpected, f"{type(exc).__name__}: {exc}"
