"""
Model registry: routes answer / generate / next / score calls to the
configured sub-models and applies the answer-consistency filter.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ..calculator import UNITS, enumerate_calc_questions, eval_calc, parse_calc_question, parse_operand
from ..config import MOCK_SCHEME, EngineConfig, resolve_mock_path
from ..core import Chain, Context, ModelId, render_history
from ..errors import CalcError, NotComplete
from ..hints import Hint
from ..textscore import normalize_answer, overlaps
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
from .http import (
    HttpChainScorer,
    HttpNextQuestionGenerator,
    HttpQAModel,
    HttpQuestionGenerator,
    ServiceClient,
)
from .mocks import (
    HashScorer,
    MockFixture,
    NullScorer,
    ScriptedNextQuestionGenerator,
    TableQAModel,
    TemplateQuestionGenerator,
)

logger = logging.getLogger(__name__)


class CalculatorQAModel:
    """The symbolic calculator behind the QA interface."""

    async def answer(self, question: str, context: str = "") -> ScoredAnswer:
        try:
            return ScoredAnswer(text=eval_calc(parse_calc_question(question)), score=1.0)
        except CalcError as e:
            logger.debug("calculator abstains on %r: %s", question, e)
            return ScoredAnswer.abstain()


class CalculatorQuestionGenerator:
    """Enumerates calculator questions from a hint vocabulary such as
    [diff, 2003, 2002] or [if_then, 12.2, 6.1, Irish, Italian]."""

    async def generate(self, request: GenRequest) -> List[str]:
        functions = [w for w in request.vocabulary if w in ("diff", "not", "if_then")]
        unit_hint = next((w for w in request.vocabulary if w in UNITS), None)
        values, words = [], []
        for word in request.vocabulary:
            if word in functions or word == unit_hint:
                continue
            try:
                values.append(parse_operand(word))
            except CalcError:
                words.append(word)
        entity_pair = (words[0], words[1]) if len(words) >= 2 else None
        questions = enumerate_calc_questions(
            values, entity_pair, request.answer, unit_hint=unit_hint, functions=functions or None
        )
        return questions[: request.count]


@dataclass
class ModelRegistry:
    qa: Dict[ModelId, QAModel]
    subq_gen: Dict[ModelId, QuestionGenerator]
    nextgen: NextQuestionGenerator
    scorer: ChainScorer = field(default_factory=NullScorer)
    sampling: SamplingParams = field(default_factory=SamplingParams)
    clients: List[ServiceClient] = field(default_factory=list)

    def __post_init__(self):
        self.qa.setdefault(ModelId.CALC, CalculatorQAModel())
        self.subq_gen.setdefault(ModelId.CALC, CalculatorQuestionGenerator())

    async def aclose(self):
        for client in self.clients:
            await client.aclose()

    async def __aenter__(self) -> "ModelRegistry":
        return self

    async def __aexit__(self, *exc):
        await self.aclose()

    async def answer(self, model: ModelId, question: str, contexts: Sequence[Context]) -> ScoredAnswer:
        """Answer with the routed sub-model.

        SQUAD questions are asked against each paragraph independently and
        the highest-scoring real answer wins; the calculator ignores context.
        """
        if model is ModelId.EOQ:
            raise ValueError("EOQ is not an answering model")
        if model is ModelId.CALC:
            return await self.qa[ModelId.CALC].answer(question, "")
        qa = self.qa[model]
        results = await asyncio.gather(*(qa.answer(question, c.text) for c in contexts))
        best: Optional[ScoredAnswer] = None
        for result in results:
            if result.no_answer:
                continue
            if best is None or result.score > best.score:
                best = result
        return best or ScoredAnswer.abstain()

    async def generate_verified(
        self, model: ModelId, hint: Hint, count: int, seed: Optional[int] = None
    ) -> List[Tuple[str, ScoredAnswer]]:
        """Generated sub-questions paired with the answers that verified them."""
        if hint.target is not model:
            raise ValueError(f"hint targets {hint.target.value}, not {model.value}")
        request = GenRequest(
            context=hint.context.text,
            answer=hint.answer,
            vocabulary=tuple(hint.vocabulary),
            count=count,
            sampling=self.sampling,
            seed=seed,
        )
        raw = []
        for question in dict.fromkeys(await self.subq_gen[model].generate(request)):
            if not question or not question.strip():
                logger.warning("dropping blank generated question for %r", hint.answer)
                continue
            raw.append(question)
        contexts = [hint.context] if isinstance(hint.context, Context) else []
        answers = await asyncio.gather(*(self.answer(model, q, contexts) for q in raw))

        verified = []
        for question, answer in zip(raw, answers):
            if answer.no_answer:
                continue
            if model is ModelId.CALC:
                ok = normalize_answer(answer.text) == normalize_answer(hint.answer)
            else:
                ok = overlaps(answer.text, hint.answer)
            if ok:
                verified.append((question, answer))
        logger.debug("%s: %d/%d generated questions verified for %r",
                     model.value, len(verified), len(raw), hint.answer)
        return verified

    async def generate_subquestions(
        self, model: ModelId, hint: Hint, count: int, seed: Optional[int] = None
    ) -> List[str]:
        return [q for q, _ in await self.generate_verified(model, hint, count, seed)]

    async def next_candidates(
        self, history: str, count: int, seed: Optional[int] = None
    ) -> List[NextGenCandidate]:
        raw = await self.nextgen.next(history, count, self.sampling, seed)
        candidates = []
        for text, logprob in raw:
            candidate = NextGenCandidate.parse(text, logprob)
            if candidate is None:
                logger.warning("dropping unparseable next question %r", text)
                continue
            candidates.append(candidate)
        return candidates

    async def score_chain(self, chain: Chain) -> float:
        if not chain.complete:
            raise NotComplete()
        value = await self.scorer.score(render_history(chain))
        return min(1.0, max(0.0, float(value)))


def build_registry(config: EngineConfig, base_dir: Optional[Path] = None) -> ModelRegistry:
    """Instantiate the sub-models named by the configured endpoints."""
    endpoints = config.endpoints
    fixtures: Dict[Path, MockFixture] = {}
    clients: List[ServiceClient] = []

    def fixture(uri: str) -> MockFixture:
        path = resolve_mock_path(uri, base_dir)
        if path not in fixtures:
            fixtures[path] = MockFixture.load(path)
        return fixtures[path]

    def client(uri: str) -> ServiceClient:
        c = ServiceClient(uri, retry=config.retry)
        clients.append(c)
        return c

    def is_mock(uri: Optional[str]) -> bool:
        return uri is not None and uri.startswith(MOCK_SCHEME)

    qa: Dict[ModelId, QAModel] = {}
    if endpoints.squad_qa:
        qa[ModelId.SQUAD] = (
            TableQAModel.from_fixture(fixture(endpoints.squad_qa))
            if is_mock(endpoints.squad_qa) else HttpQAModel(client(endpoints.squad_qa))
        )
    subq_gen: Dict[ModelId, QuestionGenerator] = {}
    if endpoints.squad_gen:
        subq_gen[ModelId.SQUAD] = (
            TemplateQuestionGenerator.from_fixture(fixture(endpoints.squad_gen))
            if is_mock(endpoints.squad_gen) else HttpQuestionGenerator(client(endpoints.squad_gen))
        )
    nextgen: NextQuestionGenerator
    if endpoints.nextgen is None:
        nextgen = ScriptedNextQuestionGenerator({})
    elif is_mock(endpoints.nextgen):
        nextgen = ScriptedNextQuestionGenerator.from_fixture(fixture(endpoints.nextgen))
    else:
        nextgen = HttpNextQuestionGenerator(client(endpoints.nextgen))
    scorer: ChainScorer
    if endpoints.scorer is None:
        scorer = NullScorer()
    elif is_mock(endpoints.scorer):
        scorer = HashScorer.from_fixture(fixture(endpoints.scorer))
    else:
        scorer = HttpChainScorer(client(endpoints.scorer))

    sampling = SamplingParams(**config.sampling.model_dump())
    return ModelRegistry(
        qa=qa, subq_gen=subq_gen, nextgen=nextgen, scorer=scorer, sampling=sampling, clients=clients
    )
