"""Exception hierarchy shared across the harness."""

from __future__ import annotations


class HarnessError(Exception):
    """Base class for every error raised by thinkpress."""


class InvalidInput(HarnessError, ValueError):
    pass


# metrics
class EmptyGoldList(InvalidInput):
    pass


# trace
class MissingThinkBlock(HarnessError):
    pass


class EmptyThinkBlock(HarnessError):
    pass


class BackendCountUnavailable(HarnessError):
    pass


class InvalidBudget(InvalidInput):
    pass


# rewards
class OutOfRange(InvalidInput):
    pass


# grpo
class GroupTooSmall(InvalidInput):
    pass


class NonFiniteReward(InvalidInput):
    pass


class LengthMismatch(InvalidInput):
    pass


class NonFiniteLogProb(InvalidInput):
    pass


class NonFiniteGradient(HarnessError, ArithmeticError):
    pass


# backend
class BackendError(HarnessError):
    """Any failure talking to a chat backend."""


class BackendTimeout(BackendError):
    pass


class HttpStatus(BackendError):
    def __init__(self, code: int, body: str):
        self.code = code
        self.body = body[:500]
        super().__init__(f"HTTP {code}: {self.body}")


class MalformedResponse(BackendError):
    pass


class AuthMissing(BackendError):
    pass


class UnscriptedRequest(BackendError):
    pass


class ScriptExhausted(BackendError):
    pass


# pipeline
class EmptyRatioSet(InvalidInput):
    pass


class SampleFailed(HarnessError):
    """A backend error annotated with the sample it happened on."""

    def __init__(self, sample_id: str, cause: Exception):
        self.sample_id = sample_id
        self.cause = cause
        super().__init__(f"sample {sample_id!r}: {type(cause).__name__}: {cause}")


# data
class SchemaError(InvalidInput):
    def __init__(self, line_number: int, field: str, detail: str = ""):
        self.line_number = line_number
        self.field = field
        msg = f"line {line_number}: field {field!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DuplicateId(InvalidInput):
    def __init__(self, sample_id: str):
        self.sample_id = sample_id
        super().__init__(f"duplicate sample id {sample_id!r}")


class EmptyDataset(InvalidInput):
    pass


class SampleTooLarge(InvalidInput):
    pass
