"""Exception hierarchy shared by every tmn module."""

from typing import Optional


class TmnError(Exception):
    """Base class for all engine errors"""


# Chains

class ChainError(TmnError):
    pass


class AlreadyComplete(ChainError):
    def __init__(self, message: str = "chain is already complete"):
        super().__init__(message)


class EmptyChain(ChainError):
    def __init__(self, message: str = "chain has no steps"):
        super().__init__(message)


class NotComplete(ChainError):
    def __init__(self, message: str = "chain is not complete"):
        super().__init__(message)


class HistoryParseError(ChainError):
    pass


# Calculator

class CalcError(TmnError):
    pass


class ParseError(CalcError):
    """Malformed calculator question"""

    def __init__(self, position: int, reason: str, text: str = ""):
        self.position = position
        self.reason = reason
        self.text = text
        super().__init__(f"{reason} at position {position}: {text!r}")


class UnitMismatch(CalcError):
    pass


class IncomparableOperands(CalcError):
    pass


# Text scoring / hints

class EmptyQuestion(TmnError):
    def __init__(self, message: str = "question has no essential words"):
        super().__init__(message)


class NoGoldAnswer(TmnError):
    def __init__(self, question_id: str):
        self.question_id = question_id
        super().__init__(f"question {question_id!r} has no gold answer")


# Services / search

class ServiceUnavailable(TmnError):
    def __init__(self, endpoint: str, attempts: int, cause: Optional[BaseException] = None):
        self.endpoint = endpoint
        self.attempts = attempts
        self.cause = cause
        detail = f": {cause}" if cause else ""
        super().__init__(f"service {endpoint} unavailable after {attempts} attempt(s){detail}")


class NoChainFound(TmnError):
    def __init__(self, question_id: str, explored: int):
        self.question_id = question_id
        self.explored = explored
        super().__init__(f"no complete chain for {question_id!r} ({explored} sub-model calls)")


# Plumbing

class ConfigError(TmnError):
    pass


class DatasetError(TmnError):
    def __init__(self, path: str, line: int, reason: str):
        self.path = path
        self.line = line
        self.reason = reason
        super().__init__(f"{path}:{line}: {reason}")


class EvaluationError(TmnError):
    pass
