"""Sub-model interfaces, service clients, mocks and the routing registry."""

from .base import (
    ChainScorer,
    GenRequest,
    NextGenCandidate,
    NextQuestionGenerator,
    QAModel,
    QuestionGenerator,
    SamplingParams,
    ScoredAnswer,
)
from .http import ServiceClient
from .mocks import (
    HashScorer,
    MockFixture,
    NullScorer,
    ScriptedNextQuestionGenerator,
    TableQAModel,
    TemplateQuestionGenerator,
)
from .registry import CalculatorQAModel, CalculatorQuestionGenerator, ModelRegistry, build_registry

__all__ = [
    "CalculatorQAModel",
    "CalculatorQuestionGenerator",
    "ChainScorer",
    "GenRequest",
    "HashScorer",
    "MockFixture",
    "ModelRegistry",
    "NextGenCandidate",
    "NextQuestionGenerator",
    "NullScorer",
    "QAModel",
    "QuestionGenerator",
    "SamplingParams",
    "ScoredAnswer",
    "ScriptedNextQuestionGenerator",
    "ServiceClient",
    "TableQAModel",
    "TemplateQuestionGenerator",
    "build_registry",
]
