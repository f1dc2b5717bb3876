"""Sub-model interfaces and the values exchanged with them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence, Tuple, runtime_checkable

from ..core import ModelId, parse_candidate, render_candidate


@dataclass(frozen=True)
class ScoredAnswer:
    text: str
    score: float
    no_answer: bool = False

    def __post_init__(self):
        if self.no_answer and self.text:
            raise ValueError("a no-answer result carries no text")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"answer score must lie in [0, 1], got {self.score}")

    @classmethod
    def abstain(cls) -> "ScoredAnswer":
        return cls(text="", score=0.0, no_answer=True)


@dataclass(frozen=True)
class SamplingParams:
    top_p: float = 0.95
    top_k: int = 10
    max_len: int = 40

    def __post_init__(self):
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"top_p must lie in (0, 1], got {self.top_p}")


@dataclass(frozen=True)
class GenRequest:
    context: str
    answer: str
    vocabulary: Tuple[str, ...]
    count: int = 1
    sampling: SamplingParams = field(default_factory=SamplingParams)
    seed: Optional[int] = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1")


@dataclass(frozen=True)
class NextGenCandidate:
    model: ModelId
    question: str
    logprob: float = 0.0

    @classmethod
    def parse(cls, raw: str, logprob: float = 0.0) -> Optional["NextGenCandidate"]:
        parsed = parse_candidate(raw)
        if parsed is None:
            return None
        return cls(model=parsed[0], question=parsed[1], logprob=min(logprob, 0.0))

    @property
    def is_end(self) -> bool:
        return self.model is ModelId.EOQ

    def surface(self) -> str:
        return render_candidate(self.model, self.question)


@runtime_checkable
class QAModel(Protocol):
    async def answer(self, question: str, context: str) -> ScoredAnswer:
        """Answer `question` against one context paragraph."""
        ...


@runtime_checkable
class QuestionGenerator(Protocol):
    async def generate(self, request: GenRequest) -> List[str]:
        ...


@runtime_checkable
class NextQuestionGenerator(Protocol):
    async def next(
        self, history: str, count: int, sampling: SamplingParams, seed: Optional[int] = None
    ) -> Sequence[Tuple[str, float]]:
        """Raw (text, logprob) outputs for the serialized history."""
        ...


@runtime_checkable
class ChainScorer(Protocol):
    async def score(self, history: str) -> float:
        """Negative-class probability of a complete chain."""
        ...
