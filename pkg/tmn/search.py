"""
Inference: best-first search over decomposition chains.

Partial chains are expanded lowest-θ first. Each expansion asks the
next-question generator for n_depth candidates, answers them with the
routed sub-model and pushes the extended chains. [EOQ] candidates finish a
chain, which is then scored as θ + λ·δ (lower is better). Since θ never
decreases along a chain, partial chains whose θ already exceeds the best
complete score can be dropped.
"""

from __future__ import annotations

import asyncio
import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from .config import SearchConfig
from .core import (
    Chain,
    ChainStep,
    ComplexQuestion,
    append_step,
    mark_complete,
    new_chain,
    render_history,
)
from .errors import EmptyQuestion, EvaluationError, NoChainFound
from .models.registry import ModelRegistry
from .textscore import answer_em, answer_f1, essential_words, theta_of

logger = logging.getLogger(__name__)


def sampling_schedule(config: SearchConfig, depth: int) -> int:
    """n_i = max(1, floor(n0 * decay^i))"""
    return max(1, math.floor(config.n0 * config.decay ** depth))


def chain_score(chain: Chain, lambda_: float) -> float:
    delta = chain.delta if chain.complete and chain.delta is not None else 0.0
    return chain.theta + lambda_ * delta


class Frontier:
    """Min-heap of partial chains keyed by (θ, insertion order)."""

    def __init__(self):
        self._heap: List[Tuple[float, int, Chain]] = []
        self._counter = itertools.count()
        self.best_complete: Optional[Tuple[Chain, float]] = None

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, chain: Chain):
        heapq.heappush(self._heap, (chain.theta, next(self._counter), chain))

    def pop(self) -> Chain:
        return heapq.heappop(self._heap)[2]

    @property
    def best_score(self) -> float:
        return self.best_complete[1] if self.best_complete else math.inf

    def offer(self, chain: Chain, score: float) -> bool:
        if score < self.best_score:
            self.best_complete = (chain, score)
            return True
        return False


@dataclass
class SearchResult:
    question_id: str
    chain: Chain
    score: float
    explored: int
    completed: List[Tuple[Chain, float]] = field(default_factory=list)
    edges: List[Tuple[Chain, Chain]] = field(default_factory=list)

    @property
    def answer(self) -> str:
        return self.chain.final_answer() or ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.question_id,
            "answer": self.answer,
            "score": self.score,
            "explored": self.explored,
            "chain": [s.to_dict() for s in self.chain.steps],
        }


async def answer_question(
    question: ComplexQuestion,
    registry: ModelRegistry,
    config: SearchConfig,
) -> SearchResult:
    """Find the lowest-scoring complete decomposition of `question`."""
    has_words = bool(essential_words(question.text))

    def theta_for(steps: Sequence[ChainStep]) -> float:
        if not has_words:
            return 0.0
        try:
            return theta_of(question.text, steps)
        except EmptyQuestion:
            return 0.0

    frontier = Frontier()
    frontier.push(new_chain(question))
    completed: List[Tuple[Chain, float]] = []
    edges: List[Tuple[Chain, Chain]] = []
    explored = 0

    while frontier and explored < config.budget:
        chain = frontier.pop()
        if chain.theta > frontier.best_score:
            break
        depth = len(chain)
        count = 1 if config.greedy else sampling_schedule(config, depth)

        explored += 1
        candidates = await registry.next_candidates(render_history(chain), count, config.seed)
        unique = list({(c.model, c.question): c for c in candidates}.values())

        if any(c.is_end for c in unique) and chain.steps and explored < config.budget:
            explored += 1
            delta = await registry.score_chain(mark_complete(chain, 0.0))
            done = mark_complete(chain, delta)
            score = chain_score(done, config.lambda_)
            completed.append((done, score))
            if frontier.offer(done, score):
                logger.debug("%s: new best chain score %.4f (%d steps)", question.id, score, len(done))

        if depth >= config.max_steps:
            continue
        routed = [c for c in unique if not c.is_end][: max(0, config.budget - explored)]
        explored += len(routed)
        answers = await asyncio.gather(
            *(registry.answer(c.model, c.question, question.contexts) for c in routed)
        )
        for candidate, answer in zip(routed, answers):
            if answer.no_answer:
                continue
            step = ChainStep(candidate.model, candidate.question, answer.text, answer.score)
            theta_new = max(chain.theta, theta_for(chain.steps + (step,)))
            extended = append_step(chain, step, theta_new)
            edges.append((chain, extended))
            if extended.theta > frontier.best_score:
                continue
            frontier.push(extended)

    if frontier.best_complete is None:
        raise NoChainFound(question.id, explored)
    best, score = frontier.best_complete
    return SearchResult(
        question_id=question.id,
        chain=best,
        score=score,
        explored=explored,
        completed=completed,
        edges=edges,
    )


# Evaluation

@dataclass
class EvalReport:
    em: float
    f1: float
    per_question: List[Dict[str, Any]]
    per_class: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "em": self.em,
            "f1": self.f1,
            "count": len(self.per_question),
            "per_class": self.per_class,
            "per_question": self.per_question,
        }


def evaluate(
    predictions: Sequence[Mapping[str, Any]],
    gold: Sequence[Mapping[str, Any]],
) -> EvalReport:
    """Mean EM/F1 of predictions against gold answers, matched by id."""
    gold_by_id = {str(g["id"]): g for g in gold}
    rows: List[Dict[str, Any]] = []
    seen = set()
    for pred in predictions:
        qid = str(pred["id"])
        if qid not in gold_by_id:
            raise EvaluationError(f"prediction {qid!r} has no gold answer")
        if qid in seen:
            raise EvaluationError(f"duplicate prediction for {qid!r}")
        seen.add(qid)
        ref = gold_by_id[qid]
        predicted = pred.get("answer") or ""
        expected = ref.get("answer") or ""
        rows.append({
            "id": qid,
            "prediction": pred.get("answer"),
            "gold": ref.get("answer"),
            "em": answer_em(predicted, expected),
            "f1": answer_f1(predicted, expected),
            "classes": list(ref.get("classes") or []),
        })

    def mean(values: List[float]) -> float:
        return sum(values) / len(values) if values else 0.0

    per_class: Dict[str, Dict[str, float]] = {}
    for name in sorted({c for r in rows for c in r["classes"]}):
        members = [r for r in rows if name in r["classes"]]
        per_class[name] = {
            "em": mean([r["em"] for r in members]),
            "f1": mean([r["f1"] for r in members]),
            "count": len(members),
        }
    return EvalReport(
        em=mean([r["em"] for r in rows]),
        f1=mean([r["f1"] for r in rows]),
        per_question=rows,
        per_class=per_class,
    )
