"""Pydantic models for JSONL records and the sub-model wire protocol."""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .core import ComplexQuestion, Context


# Dataset records

class ContextRecord(BaseModel):
    title: Optional[str] = None
    text: str = Field(min_length=1)

    @field_validator("text")
    @classmethod
    def _not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("context text is blank")
        return value


class QuestionRecord(BaseModel):
    model_config = ConfigDict(extra="ignore")

    id: str
    question: str = Field(min_length=1)
    contexts: List[ContextRecord] = Field(min_length=1)
    answer: Optional[str] = None
    dataset_tag: Optional[str] = None

    @field_validator("question")
    @classmethod
    def _question_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("question text is blank")
        return value

    def to_question(self) -> ComplexQuestion:
        return ComplexQuestion(
            id=self.id,
            text=self.question,
            contexts=tuple(Context(text=c.text, title=c.title) for c in self.contexts),
            gold_answer=self.answer,
            dataset_tag=self.dataset_tag,
        )


class GoldRecord(BaseModel):
    """Gold answer line for `tmn eval`; dataset records also validate as this."""
    model_config = ConfigDict(extra="ignore")

    id: str
    answer: Optional[str] = None
    classes: List[str] = []
    dataset_tag: Optional[str] = None


class StepRecord(BaseModel):
    model: str
    question: str
    answer: str


class PredictionRecord(BaseModel):
    model_config = ConfigDict(extra="ignore")

    id: str
    answer: Optional[str] = None
    score: Optional[float] = None
    explored: int = 0
    chain: List[StepRecord] = []


# Wire protocol

class AnswerRequest(BaseModel):
    question: str
    context: str


class AnswerResponse(BaseModel):
    answer: Optional[str] = None
    score: float = Field(default=0.0, ge=0.0, le=1.0)


class GenerateRequest(BaseModel):
    context: str
    answer: str
    vocab: List[str]
    count: int = Field(ge=1)
    top_p: float = Field(default=0.95, gt=0.0, le=1.0)
    top_k: int = 10
    max_len: int = 40
    seed: Optional[int] = None


class GenerateResponse(BaseModel):
    questions: List[str] = []


class NextRequest(BaseModel):
    history: str
    count: int = Field(ge=1)
    top_p: float = Field(default=0.95, gt=0.0, le=1.0)
    top_k: int = 10
    seed: Optional[int] = None


class NextCandidateOut(BaseModel):
    text: str
    logprob: float = Field(default=0.0, le=0.0)


class NextResponse(BaseModel):
    candidates: List[NextCandidateOut] = []


class ScoreRequest(BaseModel):
    history: str


class ScoreResponse(BaseModel):
    negative_prob: float = Field(ge=0.0, le=1.0)


class SquadRecord(BaseModel):
    """Single-hop QA example used to build question-generator training data"""
    model_config = ConfigDict(extra="ignore")

    context: str = Field(min_length=1)
    question: str = Field(min_length=1)
    answer: str
