"""
Deterministic table-driven sub-models.

One fixture document feeds every mock::

    {
      "qa":        {"answers": {"<question>": "<answer>" | {"answer", "score", "context_contains"} | [...]},
                    "fuzzy": true, "require_span": false},
      "generator": {"by_answer": {"<answer>": ["<question>", ...]}, "templates": ["How many {words}?"]},
      "nextgen":   {"script": {"<history>": ["(SQUAD) ...", {"text": "[EOQ]", "logprob": -0.1}]},
                    "default": ["[EOQ]"]},
      "scorer":    {"scores": {"<history or sha256>": 0.2}, "default": 0.0}
    }

Sampling parameters and seeds are accepted and ignored; only counts apply.
"""

from __future__ import annotations

import hashlib
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import yaml

from ..errors import ConfigError
from ..textscore import normalize_answer
from .base import GenRequest, SamplingParams, ScoredAnswer

logger = logging.getLogger(__name__)


@dataclass
class MockFixture:
    qa: Dict[str, Any] = field(default_factory=dict)
    generator: Dict[str, Any] = field(default_factory=dict)
    nextgen: Dict[str, Any] = field(default_factory=dict)
    scorer: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MockFixture":
        try:
            with open(path, encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot load mock fixture {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"mock fixture {path} must be a JSON object")
        unknown = set(data) - {"qa", "generator", "nextgen", "scorer"}
        if unknown:
            raise ConfigError(f"mock fixture {path} has unknown sections: {sorted(unknown)}")
        return cls(**{k: data.get(k) or {} for k in ("qa", "generator", "nextgen", "scorer")})


def _key(text: str) -> str:
    return normalize_answer(text)


class TableQAModel:
    """Exact (or normalized) question -> answer lookup."""

    def __init__(self, answers: Dict[str, Any], fuzzy: bool = True, require_span: bool = False):
        self.fuzzy = fuzzy
        self.require_span = require_span
        self.table: Dict[str, List[Dict[str, Any]]] = {}
        for question, entry in answers.items():
            entries = entry if isinstance(entry, list) else [entry]
            rows = [e if isinstance(e, dict) else {"answer": e} for e in entries]
            self.table[_key(question) if fuzzy else question] = rows

    @classmethod
    def from_fixture(cls, fixture: MockFixture) -> "TableQAModel":
        qa = fixture.qa
        return cls(qa.get("answers", {}), qa.get("fuzzy", True), qa.get("require_span", False))

    async def answer(self, question: str, context: str) -> ScoredAnswer:
        rows = self.table.get(_key(question) if self.fuzzy else question, [])
        lowered = context.lower()
        for row in rows:
            needle = row.get("context_contains")
            if needle and needle.lower() not in lowered:
                continue
            text = row.get("answer")
            if not text:
                return ScoredAnswer.abstain()
            if self.require_span and text.lower() not in lowered:
                continue
            return ScoredAnswer(text=text, score=float(row.get("score", 1.0)))
        return ScoredAnswer.abstain()


class TemplateQuestionGenerator:
    """Questions listed per hint answer, else templates filled from the vocabulary."""

    def __init__(self, by_answer: Dict[str, List[str]], templates: Sequence[str] = ()):
        self.by_answer = {_key(a): list(qs) for a, qs in by_answer.items()}
        self.templates = list(templates)

    @classmethod
    def from_fixture(cls, fixture: MockFixture) -> "TemplateQuestionGenerator":
        gen = fixture.generator
        return cls(gen.get("by_answer", {}), gen.get("templates", []))

    async def generate(self, request: GenRequest) -> List[str]:
        listed = self.by_answer.get(_key(request.answer))
        if listed is not None:
            return listed[: request.count]
        slots = defaultdict(str, {
            "words": " ".join(request.vocabulary),
            "answer": request.answer,
            **{f"v{i}": w for i, w in enumerate(request.vocabulary)},
        })
        return [t.format_map(slots) for t in self.templates][: request.count]


class ScriptedNextQuestionGenerator:
    """History -> scripted candidate list, with a default for unknown histories."""

    def __init__(self, script: Dict[str, List[Any]], default: Optional[List[Any]] = None):
        self.script = {h: self._rows(c) for h, c in script.items()}
        self.default = self._rows(default or [])

    @staticmethod
    def _rows(candidates: List[Any]) -> List[Tuple[str, float]]:
        rows = []
        for rank, c in enumerate(candidates):
            if isinstance(c, dict):
                rows.append((str(c["text"]), float(c.get("logprob", -rank))))
            else:
                rows.append((str(c), float(-rank)))
        return rows

    @classmethod
    def from_fixture(cls, fixture: MockFixture) -> "ScriptedNextQuestionGenerator":
        nextgen = fixture.nextgen
        return cls(nextgen.get("script", {}), nextgen.get("default"))

    async def next(
        self, history: str, count: int, sampling: SamplingParams, seed: Optional[int] = None
    ) -> Sequence[Tuple[str, float]]:
        rows = self.script.get(history)
        if rows is None:
            logger.debug("no script entry for history %r", history)
            rows = self.default
        return rows[:count]


def history_digest(history: str) -> str:
    return hashlib.sha256(history.encode("utf-8")).hexdigest()


class HashScorer:
    """Scores looked up by history text or its sha256 digest."""

    def __init__(self, scores: Dict[str, float], default: float = 0.0):
        self.scores = dict(scores)
        self.default = default

    @classmethod
    def from_fixture(cls, fixture: MockFixture) -> "HashScorer":
        scorer = fixture.scorer
        return cls(scorer.get("scores", {}), float(scorer.get("default", 0.0)))

    async def score(self, history: str) -> float:
        if history in self.scores:
            return float(self.scores[history])
        return float(self.scores.get(history_digest(history), self.default))


class NullScorer:
    """Word-overlap-only scoring: every chain gets δ = 0."""

    async def score(self, history: str) -> float:
        return 0.0
