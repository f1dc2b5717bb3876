"""
Training-data factory.

hint chains -> verified decompositions -> filtered decompositions ->
next-question generator / chain scorer / question generator examples.
"""

from __future__ import annotations

import dataclasses
import logging
import random
from dataclasses import dataclass
from itertools import product
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .config import EngineConfig, SearchConfig
from .core import (
    EOQ_TOKEN,
    Chain,
    ChainStep,
    ComplexQuestion,
    append_step,
    history_text,
    new_chain,
    render_candidate,
    render_history,
)
from .errors import EmptyQuestion, NoChainFound, NoGoldAnswer
from .hints import HintChain, QuestionClass, classify, extract_hints
from .models.mocks import NullScorer
from .models.registry import ModelRegistry
from .search import answer_question
from .textscore import answer_f1, chain_metrics, essential_words, passes_filter, theta_of

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingExample:
    input: str
    output: str

    def to_dict(self) -> Dict[str, Any]:
        return {"input": self.input, "output": self.output}


@dataclass(frozen=True)
class ScorerExample:
    history: str
    label: str

    def to_dict(self) -> Dict[str, Any]:
        return {"history": self.history, "label": self.label}


@dataclass(frozen=True)
class QGenExample:
    context: str
    answer: str
    vocabulary: Tuple[str, ...]
    question: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "context": self.context,
            "vocab": list(self.vocabulary),
            "answer": self.answer,
            "question": self.question,
        }


# Decompositions

def _theta(question: ComplexQuestion, steps: Sequence[ChainStep]) -> float:
    try:
        return theta_of(question.text, steps)
    except EmptyQuestion:
        return 0.0


async def build_decompositions(
    question: ComplexQuestion,
    chains: Sequence[HintChain],
    registry: ModelRegistry,
    per_step: int = 5,
    cap: int = 50,
    seed: Optional[int] = None,
) -> List[Chain]:
    """Verified decompositions following the given hint chains.

    Each hint yields up to `per_step` sub-questions whose answers agree with
    the hint answer; every combination across a hint chain's steps forms a
    decomposition. Identical step sequences are kept once, and at most `cap`
    chains survive, lowest θ first.
    """
    found: Dict[Tuple, Chain] = {}
    for hint_chain in chains:
        options: List[List[ChainStep]] = []
        for hint in hint_chain.hints:
            verified = await registry.generate_verified(hint.target, hint, per_step, seed)
            options.append([
                ChainStep(hint.target, q, answer.text, answer.score)
                for q, answer in verified[:per_step]
            ])
            if not options[-1]:
                logger.debug("%s: no verified question for hint %d (%r)",
                             question.id, hint.step_index, hint.answer)
                break
        if len(options) < len(hint_chain.hints) or not all(options):
            continue
        for steps in product(*options):
            key = tuple((s.model, s.question, s.answer) for s in steps)
            if key in found:
                continue
            chain = new_chain(question)
            for step in steps:
                chain = append_step(chain, step, max(chain.theta, _theta(question, chain.steps + (step,))))
            found[key] = chain

    ranked = sorted(enumerate(found.values()), key=lambda item: (item[1].theta, item[0]))
    return [chain for _, chain in ranked[:cap]]


def filter_decompositions(
    chains: Iterable[Chain],
    theta_max: float = 0.3,
    mu_max: float = 0.3,
    sum_max: float = 0.4,
) -> List[Chain]:
    kept = []
    for chain in chains:
        try:
            metrics = chain_metrics(chain)
        except EmptyQuestion:
            continue
        if passes_filter(metrics, theta_max, mu_max, sum_max):
            kept.append(chain)
    return kept


async def decompose(
    question: ComplexQuestion,
    registry: ModelRegistry,
    config: EngineConfig,
    seed: Optional[int] = None,
) -> List[Chain]:
    """classify -> extract_hints -> build_decompositions -> filter_decompositions"""
    if not question.gold_answer:
        logger.warning("%s: no gold answer, skipped", question.id)
        return []
    classes = classify(question)
    if classes == {QuestionClass.OUT_OF_SCOPE}:
        logger.warning("%s: out of scope, skipped", question.id)
        return []
    hint_chains = extract_hints(question, classes, window=config.proximity_window)
    built = await build_decompositions(
        question, hint_chains, registry,
        per_step=config.datagen.per_step, cap=config.datagen.cap, seed=seed,
    )
    f = config.filters
    kept = filter_decompositions(built, f.theta_max, f.mu_max, f.sum_max)
    logger.info("%s: %d hint chains, %d decompositions, %d kept",
                question.id, len(hint_chains), len(built), len(kept))
    return kept


# Emitters

def emit_nextgen_examples(chains: Iterable[Chain]) -> List[TrainingExample]:
    """k+1 examples per k-step chain; the last one outputs [EOQ].

    Duplicate chains give duplicate examples.
    """
    examples = []
    for chain in chains:
        qc = chain.question.text
        for i, step in enumerate(chain.steps):
            examples.append(TrainingExample(
                input=history_text(qc, chain.steps[:i]),
                output=render_candidate(step.model, step.question),
            ))
        examples.append(TrainingExample(input=history_text(qc, chain.steps), output=EOQ_TOKEN))
    return examples


def emit_scorer_examples(
    question: ComplexQuestion,
    sampled_chains: Iterable[Chain],
    f1_threshold: float = 0.2,
) -> List[ScorerExample]:
    if question.gold_answer is None:
        raise NoGoldAnswer(question.id)
    examples = []
    for chain in sampled_chains:
        f1 = answer_f1(chain.final_answer() or "", question.gold_answer)
        label = "positive" if f1 >= f1_threshold else "negative"
        examples.append(ScorerExample(history=render_history(chain), label=label))
    return examples


async def sample_scorer_chains(
    question: ComplexQuestion,
    registry: ModelRegistry,
    search: SearchConfig,
    n0: int = 5,
) -> List[Chain]:
    """Complete chains discovered by a word-overlap-only search with N = n0."""
    unscored = dataclasses.replace(registry, scorer=NullScorer())
    config = search.model_copy(update={"n0": n0, "greedy": False})
    try:
        result = await answer_question(question, unscored, config)
    except NoChainFound:
        return []
    return [chain for chain, _ in result.completed]


def _coarse(token: str) -> str:
    return "numeric" if any(ch.isdigit() for ch in token) else "alpha"


def prep_qgen_training(
    squad_records: Sequence[Mapping[str, str]],
    distractor_range: Tuple[int, int] = (2, 7),
    seed: Optional[int] = None,
) -> List[QGenExample]:
    """Question-generator examples whose vocabulary mixes the question's
    essential words with distractors from sibling questions of the same
    paragraph (or from all questions when the paragraph has no siblings)."""
    rng = random.Random(seed)
    lo, hi = distractor_range
    phis = [essential_words(r["question"]).to_list() for r in squad_records]

    by_context: Dict[str, List[int]] = {}
    for i, record in enumerate(squad_records):
        by_context.setdefault(record["context"], []).append(i)

    examples = []
    for i, record in enumerate(squad_records):
        own = set(phis[i])
        siblings = [k for k in by_context[record["context"]] if k != i]
        donors = siblings or [k for k in range(len(squad_records)) if k != i]
        pool = sorted({t for k in donors for t in phis[k]} - own)
        if not siblings:
            logger.debug("record %d: no sibling questions, using the global pool", i)

        j = rng.randint(lo, hi)
        wanted = {_coarse(t) for t in own} or {"alpha"}
        preferred = [t for t in pool if _coarse(t) in wanted]
        others = [t for t in pool if _coarse(t) not in wanted]
        distractors = rng.sample(preferred, min(j, len(preferred)))
        if len(distractors) < j:
            distractors += rng.sample(others, min(j - len(distractors), len(others)))

        vocab = phis[i] + distractors
        rng.shuffle(vocab)
        examples.append(QGenExample(
            context=record["context"],
            answer=record["answer"],
            vocabulary=tuple(vocab),
            question=record["question"],
        ))
    return examples
