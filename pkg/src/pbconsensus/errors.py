"""Exception hierarchy shared by all pbconsensus modules."""


class PBError(Exception):
    """Base class for every error raised by this package."""


class DataError(PBError):
    """Input data is malformed or inconsistent (CLI exit code 2)."""


class MissingSection(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class UnknownProjectReference(DataError):
    pass


class NonPositiveBudget(DataError):
    pass


class MixedDistricts(DataError):
    pass


class DuplicateYear(DataError):
    pass


class EmptyHistory(DataError):
    pass


class TooManyProjects(PBError):
    pass


class SampleTooLarge(PBError):
    pass


class DegreeTooLarge(PBError):
    pass


class EmptyBallotPool(DataError):
    pass


class NoBallots(DataError):
    pass
