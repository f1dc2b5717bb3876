"""
Domain types shared by every module: questions, contexts, model identifiers
and decomposition chains, plus the canonical history serialization.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from .errors import AlreadyComplete, EmptyChain, HistoryParseError

QC_MARKER = "QC:"
Q_MARKER = "Q:"
A_MARKER = "A:"
EOQ_TOKEN = "[EOQ]"


class ModelId(Enum):
    """Sub-models a next question can be routed to"""
    SQUAD = "SQUAD"
    CALC = "CALC"
    EOQ = "EOQ"


@dataclass(frozen=True)
class Context:
    """A context paragraph, optionally titled (HotpotQA documents)"""
    text: str
    title: Optional[str] = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("context text must be non-empty")

    def to_dict(self) -> Dict[str, Any]:
        return {"title": self.title, "text": self.text}


@dataclass(frozen=True)
class EmptyContext:
    """The empty context used by calculator hints"""

    text = ""
    title = None

    def to_dict(self) -> Dict[str, Any]:
        return {"empty": True}


EMPTY_CONTEXT = EmptyContext()

AnyContext = Union[Context, EmptyContext]


@dataclass(frozen=True)
class ComplexQuestion:
    """Input question with its context paragraphs and optional gold answer"""
    id: str
    text: str
    contexts: Tuple[Context, ...]
    gold_answer: Optional[str] = None
    dataset_tag: Optional[str] = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError(f"question {self.id!r} has empty text")
        if not isinstance(self.contexts, tuple):
            object.__setattr__(self, "contexts", tuple(self.contexts))
        if len(self.contexts) < 1:
            raise ValueError(f"question {self.id!r} has no contexts")

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "ComplexQuestion":
        return cls(
            id=str(record["id"]),
            text=record["question"],
            contexts=tuple(
                Context(text=c["text"], title=c.get("title")) for c in record.get("contexts", [])
            ),
            gold_answer=record.get("answer"),
            dataset_tag=record.get("dataset_tag"),
        )

    def to_record(self) -> Dict[str, Any]:
        record = {
            "id": self.id,
            "question": self.text,
            "contexts": [c.to_dict() for c in self.contexts],
            "answer": self.gold_answer,
        }
        if self.dataset_tag is not None:
            record["dataset_tag"] = self.dataset_tag
        return record


@dataclass(frozen=True)
class ChainStep:
    """One (model, sub-question, answer) step of a decomposition"""
    model: ModelId
    question: str
    answer: str
    answer_score: float = 1.0

    def __post_init__(self):
        if self.model is ModelId.EOQ:
            raise ValueError("EOQ cannot be the model of a chain step")
        if not self.question or not self.question.strip():
            raise ValueError("chain step question must be non-empty")

    def to_dict(self) -> Dict[str, Any]:
        return {"model": self.model.value, "question": self.question, "answer": self.answer}


@dataclass(frozen=True)
class Chain:
    """A (partial) decomposition of a complex question"""
    question: ComplexQuestion
    steps: Tuple[ChainStep, ...] = field(default_factory=tuple)
    complete: bool = False
    theta: float = 0.0
    delta: Optional[float] = None

    def __post_init__(self):
        if self.complete and not self.steps:
            raise EmptyChain()
        if self.delta is not None and not self.complete:
            raise ValueError("delta is only defined for complete chains")
        if self.theta < 0:
            raise ValueError("theta must be non-negative")

    def __len__(self) -> int:
        return len(self.steps)

    def final_answer(self) -> Optional[str]:
        """Answer of the last step (the chain's answer once complete)"""
        return self.steps[-1].answer if self.steps else None

    def prefix(self, length: int) -> "Chain":
        """Partial chain made of the first `length` steps"""
        return Chain(question=self.question, steps=self.steps[:length])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.question.id,
            "complete": self.complete,
            "theta": self.theta,
            "delta": self.delta,
            "chain": [s.to_dict() for s in self.steps],
        }


def new_chain(question: ComplexQuestion) -> Chain:
    return Chain(question=question)


def append_step(chain: Chain, step: ChainStep, theta_new: float) -> Chain:
    """Return a new chain with `step` appended and theta set to `theta_new`."""
    if chain.complete:
        raise AlreadyComplete()
    if theta_new < chain.theta:
        raise ValueError(f"theta cannot decrease ({chain.theta} -> {theta_new})")
    return replace(chain, steps=chain.steps + (step,), theta=theta_new)


def mark_complete(chain: Chain, delta: float) -> Chain:
    """Terminate the chain ([EOQ] was generated) and record the scorer value."""
    if not chain.steps:
        raise EmptyChain()
    if chain.complete:
        raise AlreadyComplete()
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    return replace(chain, complete=True, delta=delta)


# History serialization

_MARKERS = (QC_MARKER, Q_MARKER, A_MARKER)


def escape_field(text: str) -> str:
    """Backslash-escape backslashes and literal QC:/Q:/A: markers."""
    text = text.replace("\\", "\\\\")
    for marker in _MARKERS:
        text = text.replace(marker, "\\" + marker)
    return text


def history_text(question_text: str, steps: Sequence[Union[ChainStep, Tuple[str, str]]]) -> str:
    parts = [f"{QC_MARKER} {escape_field(question_text)}"]
    for step in steps:
        q, a = (step.question, step.answer) if isinstance(step, ChainStep) else step
        parts.append(f"{Q_MARKER} {escape_field(q)}")
        parts.append(f"{A_MARKER} {escape_field(a)}")
    return " ".join(parts)


def render_history(chain: Chain) -> str:
    """'QC: <qc> Q: <q1> A: <a1> ...' used as next-question generator input."""
    return history_text(chain.question.text, chain.steps)


def parse_history(history: str) -> Tuple[str, List[Tuple[str, str]]]:
    """Inverse of render_history: returns (qc, [(q1, a1), ...])."""
    head = QC_MARKER + " "
    if not history.startswith(head):
        raise HistoryParseError(f"history must start with {head!r}")

    fields: List[str] = []
    markers: List[str] = []
    buf: List[str] = []
    i = len(head)
    n = len(history)
    while i < n:
        ch = history[i]
        if ch == "\\" and i + 1 < n:
            buf.append(history[i + 1])
            i += 2
            continue
        sep = next(
            (m for m in (Q_MARKER, A_MARKER) if history.startswith(f" {m} ", i)),
            None,
        )
        if sep is not None:
            fields.append("".join(buf))
            markers.append(sep)
            buf = []
            i += len(sep) + 2
            continue
        buf.append(ch)
        i += 1
    fields.append("".join(buf))

    expected = [Q_MARKER, A_MARKER] * (len(markers) // 2)
    if markers != expected:
        raise HistoryParseError(f"history markers out of order: {markers}")
    qc = fields[0]
    pairs = [(fields[k], fields[k + 1]) for k in range(1, len(fields), 2)]
    return qc, pairs


# Next-question surface form: "(SQUAD) question", "(CALC) question" or "[EOQ]"

_PREFIX_RE = re.compile(r"^\s*\((SQUAD|CALC)\)\s*(.*\S)\s*$", re.DOTALL)


def render_candidate(model: ModelId, question: str = "") -> str:
    if model is ModelId.EOQ:
        return EOQ_TOKEN
    return f"({model.value}) {question}"


def parse_candidate(raw: str) -> Optional[Tuple[ModelId, str]]:
    """Split a generated string into (model, question); None when malformed."""
    if raw.strip() == EOQ_TOKEN:
        return ModelId.EOQ, ""
    match = _PREFIX_RE.match(raw)
    if not match:
        return None
    return ModelId(match.group(1)), match.group(2)
