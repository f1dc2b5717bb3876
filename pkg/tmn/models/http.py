"""
JSON-over-HTTP clients for the neural sub-model services.

    POST /answer   {"question", "context"}                  -> {"answer", "score"}
    POST /generate {"context", "answer", "vocab", ...}      -> {"questions"}
    POST /next     {"history", "count", "top_p", ...}       -> {"candidates"}
    POST /score    {"history"}                              -> {"negative_prob"}
"""

from __future__ import annotations

import asyncio
import logging
from typing import List, Optional, Sequence, Tuple, Type, TypeVar

import httpx
from pydantic import BaseModel, ValidationError

from ..config import RetryConfig
from ..errors import ServiceUnavailable
from ..schemas import (
    AnswerRequest,
    AnswerResponse,
    GenerateRequest,
    GenerateResponse,
    NextRequest,
    NextResponse,
    ScoreRequest,
    ScoreResponse,
)
from .base import GenRequest, SamplingParams, ScoredAnswer

logger = logging.getLogger(__name__)

R = TypeVar("R", bound=BaseModel)


class ServiceClient:
    """Shared AsyncClient with retry and exponential backoff."""

    def __init__(
        self,
        base_url: str,
        retry: Optional[RetryConfig] = None,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.retry = retry or RetryConfig()
        self._transport = transport
        self._client: Optional[httpx.AsyncClient] = None

    @property
    def client(self) -> httpx.AsyncClient:
        if self._client is None:
            self._client = httpx.AsyncClient(
                base_url=self.base_url,
                timeout=self.retry.timeout,
                transport=self._transport,
            )
        return self._client

    async def aclose(self):
        if self._client is not None:
            await self._client.aclose()
            self._client = None

    async def post(self, path: str, payload: BaseModel, response_model: Type[R]) -> R:
        endpoint = f"{self.base_url}{path}"
        last_error: Optional[BaseException] = None
        for attempt in range(self.retry.attempts):
            try:
                response = await self.client.post(path, json=payload.model_dump())
                response.raise_for_status()
                return response_model.model_validate(response.json())
            except httpx.HTTPStatusError as e:
                if e.response.status_code < 500:
                    raise ServiceUnavailable(endpoint, attempt + 1, e) from e
                last_error = e
            except httpx.TransportError as e:
                last_error = e
            except (ValueError, ValidationError) as e:
                raise ServiceUnavailable(endpoint, attempt + 1, e) from e

            if attempt < self.retry.attempts - 1:
                delay = self.retry.backoff * (2 ** attempt)
                logger.warning(
                    "%s failed (%s), retrying in %.2fs", endpoint, last_error, delay
                )
                await asyncio.sleep(delay)
        raise ServiceUnavailable(endpoint, self.retry.attempts, last_error)


class HttpQAModel:
    def __init__(self, client: ServiceClient):
        self.client = client

    async def answer(self, question: str, context: str) -> ScoredAnswer:
        result = await self.client.post(
            "/answer", AnswerRequest(question=question, context=context), AnswerResponse
        )
        if not result.answer:
            return ScoredAnswer.abstain()
        return ScoredAnswer(text=result.answer, score=result.score)


class HttpQuestionGenerator:
    def __init__(self, client: ServiceClient):
        self.client = client

    async def generate(self, request: GenRequest) -> List[str]:
        payload = GenerateRequest(
            context=request.context,
            answer=request.answer,
            vocab=list(request.vocabulary),
            count=request.count,
            top_p=request.sampling.top_p,
            top_k=request.sampling.top_k,
            max_len=request.sampling.max_len,
            seed=request.seed,
        )
        result = await self.client.post("/generate", payload, GenerateResponse)
        return result.questions


class HttpNextQuestionGenerator:
    def __init__(self, client: ServiceClient):
        self.client = client

    async def next(
        self, history: str, count: int, sampling: SamplingParams, seed: Optional[int] = None
    ) -> Sequence[Tuple[str, float]]:
        payload = NextRequest(
            history=history, count=count, top_p=sampling.top_p, top_k=sampling.top_k, seed=seed
        )
        result = await self.client.post("/next", payload, NextResponse)
        return [(c.text, c.logprob) for c in result.candidates]


class HttpChainScorer:
    def __init__(self, client: ServiceClient):
        self.client = client

    async def score(self, history: str) -> float:
        result = await self.client.post("/score", ScoreRequest(history=history), ScoreResponse)
        return result.negative_prob
