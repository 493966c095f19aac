"""Exception hierarchy shared by every brandgraph module."""

from __future__ import annotations


class BrandgraphError(Exception):
    """Base class for all errors raised by brandgraph."""


class DatasetError(BrandgraphError):
    """A dataset directory could not be parsed.

    ``file`` and ``line`` locate the problem (``line`` is 1-based and may be
    ``None`` when the error is not tied to a single row).
    """

    def __init__(self, file: str, line: int | None, reason: str):
        self.file = file
        self.line = line
        self.reason = reason
        where = file if line is None else f"{file}:{line}"
        super().__init__(f"{where}: {reason}")


class MissingFile(DatasetError):
    def __init__(self, file: str):
        super().__init__(file, None, "file not found")


class MalformedRow(DatasetError):
    pass


class ReferentialIntegrity(DatasetError):
    pass


class DuplicateId(DatasetError):
    pass


class PostLimitExceeded(DatasetError):
    pass


class GraphError(BrandgraphError):
    pass


class EmptyGraph(GraphError):
    pass


class DegenerateGraph(GraphError):
    pass


class InvalidDamping(BrandgraphError, ValueError):
    pass


class PartitionMismatch(BrandgraphError):
    pass


class InvalidSpec(BrandgraphError, ValueError):
    pass


class StageError(BrandgraphError):
    """Wraps a failure raised while running one stage of the analysis pipeline."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
