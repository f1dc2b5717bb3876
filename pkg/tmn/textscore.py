"""
Lexical machinery: tokenization, essential words, chain metrics and answer
evaluation.

Essential words are lowercase non-stopword tokens. A part-of-speech tagger
can be plugged in with `configure(tagger=...)`; without one only the
packaged stopword list is applied.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Protocol, Sequence, Tuple, Union

import regex

from .core import Chain, ChainStep
from .errors import EmptyQuestion

logger = logging.getLogger(__name__)

_TOKEN_RE = regex.compile(
    r"[\p{L}\p{N}_]+(?:(?:['’]|(?<=\p{N})[.,](?=\p{N}))[\p{L}\p{N}_]+)*"
)
_ARTICLES_RE = regex.compile(r"\b(a|an|the)\b")
_PUNCT_RE = regex.compile(
    r"(?<!\p{N})\.|\.(?!\p{N})|[[\p{P}\p{S}]--[.]]", regex.V1
)

# Calculator vocabulary never counts as a newly introduced word
CALC_KEYWORDS = frozenset(
    {"diff", "not", "if_then", "if", "then", "day", "days", "month", "months", "year", "years"}
)

ESSENTIAL_TAGS = frozenset({"NOUN", "VERB", "NUM", "PROPN", "ADJ", "ADV"})

DEFAULT_OVERLAP_THRESHOLD = 0.8

# Slack for θ + μ, both ratios over the same |Φ(qc)|
_SUM_EPSILON = 1e-9


class TokenSet:
    """Insertion-ordered set of lowercase tokens."""

    __slots__ = ("_items",)

    def __init__(self, tokens: Iterable[str] = ()):
        self._items = tuple(dict.fromkeys(tokens))

    def __iter__(self) -> Iterator[str]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, token: object) -> bool:
        return token in self._items

    def __eq__(self, other: object) -> bool:
        if isinstance(other, TokenSet):
            return set(self._items) == set(other._items)
        if isinstance(other, (set, frozenset)):
            return set(self._items) == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._items))

    def __or__(self, other: Iterable[str]) -> "TokenSet":
        return TokenSet((*self._items, *other))

    def __sub__(self, other: Iterable[str]) -> "TokenSet":
        drop = set(other)
        return TokenSet(t for t in self._items if t not in drop)

    def __and__(self, other: Iterable[str]) -> "TokenSet":
        keep = set(other)
        return TokenSet(t for t in self._items if t in keep)

    def __repr__(self) -> str:
        return f"TokenSet({list(self._items)!r})"

    def to_list(self) -> List[str]:
        return list(self._items)


class PosTagger(Protocol):
    def tag(self, text: str) -> Sequence[Tuple[str, str]]:
        """Return (token, universal POS tag) pairs."""
        ...


class SpacyPosTagger:
    """POS tagger backed by spaCy (install the `pos` extra)."""

    def __init__(self, model: str = "en_core_web_sm"):
        import spacy

        self.nlp = spacy.load(model, disable=["parser", "ner", "lemmatizer"])

    def tag(self, text: str) -> Sequence[Tuple[str, str]]:
        return [(tok.text, tok.pos_) for tok in self.nlp(text)]


def load_stopwords(path: Optional[Union[str, Path]] = None) -> frozenset:
    if path is None:
        content = resources.files("tmn.resources").joinpath("stopwords.txt").read_text("utf-8")
    else:
        content = Path(path).read_text("utf-8")
    return frozenset(
        line.strip().lower() for line in content.splitlines() if line.strip()
    )


@dataclass
class Lexicon:
    stopwords: frozenset
    tagger: Optional[PosTagger] = None
    zeta_mode: str = "prune"
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD


_lexicon = Lexicon(stopwords=load_stopwords())


def configure(
    stopwords_path: Optional[Union[str, Path]] = None,
    tagger: Optional[PosTagger] = None,
    zeta_mode: str = "prune",
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD,
) -> Lexicon:
    """Replace the process-wide lexicon used by the scoring functions."""
    global _lexicon
    if zeta_mode not in ("prune", "literal"):
        raise ValueError(f"unknown zeta mode {zeta_mode!r}")
    _lexicon = Lexicon(
        stopwords=load_stopwords(stopwords_path),
        tagger=tagger,
        zeta_mode=zeta_mode,
        overlap_threshold=overlap_threshold,
    )
    logger.debug("lexicon configured: %d stopwords, tagger=%s", len(_lexicon.stopwords), tagger)
    return _lexicon


# Tokens

def tokenize(text: str) -> List[str]:
    return [t.lower().replace("’", "'") for t in _TOKEN_RE.findall(text)]


def tokens(text: str) -> TokenSet:
    return TokenSet(tokenize(text))


def essential_words(text: str) -> TokenSet:
    """Φ: lowercase content tokens of `text`."""
    words = [t for t in tokenize(text) if t not in _lexicon.stopwords]
    if _lexicon.tagger is not None and words:
        tagged = {
            tok.lower()
            for tok, tag in _lexicon.tagger.tag(text)
            if tag in ESSENTIAL_TAGS
        }
        words = [w for w in words if w in tagged]
    return TokenSet(words)


def zeta(question: str, own_doc, other_doc) -> TokenSet:
    """ζ: Φ(question) without the terms found only in the other document."""
    phi = essential_words(question)
    own = set(tokenize(own_doc.text))
    other = set(tokenize(other_doc.text))
    exclusive = other - own
    if _lexicon.zeta_mode == "literal":
        return phi & exclusive
    return phi - exclusive


# Chain metrics

@dataclass(frozen=True)
class ChainMetrics:
    theta: float
    mu: float
    nu: int


StepLike = Union[ChainStep, Tuple[str, str]]


def _pairs(steps: Sequence[StepLike]) -> List[Tuple[str, str]]:
    return [(s.question, s.answer) if isinstance(s, ChainStep) else tuple(s) for s in steps]


def _question_words(question: str) -> TokenSet:
    phi = essential_words(question)
    if not phi:
        raise EmptyQuestion()
    return phi


def new_words(question: str, steps: Sequence[StepLike]) -> TokenSet:
    """Words introduced by the sub-questions that appear neither in the
    question nor in an earlier answer."""
    phi_qc = set(essential_words(question))
    seen_answers: set = set()
    introduced: List[str] = []
    for q, a in _pairs(steps):
        for word in essential_words(q):
            if word in phi_qc or word in seen_answers or word in CALC_KEYWORDS:
                continue
            introduced.append(word)
        seen_answers.update(tokenize(a))
    return TokenSet(introduced)


def theta_of(question: str, steps: Sequence[StepLike]) -> float:
    phi = _question_words(question)
    return len(new_words(question, steps)) / len(phi)


def mu_of(question: str, steps: Sequence[StepLike]) -> float:
    phi = _question_words(question)
    covered: set = set()
    for q, _ in _pairs(steps):
        covered.update(essential_words(q))
    return len([w for w in phi if w not in covered]) / len(phi)


def _answer_tokens(answer: str) -> set:
    toks = tokenize(answer)
    content = {t for t in toks if t not in _lexicon.stopwords}
    return content or set(toks)


def nu_of(steps: Sequence[StepLike]) -> int:
    pairs = _pairs(steps)
    if len(pairs) < 2:
        return 0
    final = set(tokenize(pairs[-1][1]))
    unused = 0
    for i, (_, answer) in enumerate(pairs[:-1]):
        later: set = set(final)
        for q, _ in pairs[i + 1:]:
            later.update(tokenize(q))
        if not _answer_tokens(answer) & later:
            unused += 1
    return unused


def theta(chain: Chain) -> float:
    return theta_of(chain.question.text, chain.steps)


def mu(chain: Chain) -> float:
    return mu_of(chain.question.text, chain.steps)


def nu(chain: Chain) -> int:
    return nu_of(chain.steps)


def chain_metrics(chain: Chain) -> ChainMetrics:
    return ChainMetrics(theta=theta(chain), mu=mu(chain), nu=nu(chain))


def passes_filter(
    metrics: ChainMetrics,
    theta_max: float = 0.3,
    mu_max: float = 0.3,
    sum_max: float = 0.4,
) -> bool:
    return (
        metrics.theta < theta_max
        and metrics.mu < mu_max
        and metrics.theta + metrics.mu < sum_max - _SUM_EPSILON
        and metrics.nu == 0
    )


# Answer evaluation

def normalize_answer(text: str) -> str:
    """Lowercase, drop punctuation (keeping decimal points) and articles."""
    text = text.lower()
    text = _PUNCT_RE.sub("", text)
    text = _ARTICLES_RE.sub(" ", text)
    return " ".join(text.split())


def answer_em(prediction: str, gold: str) -> int:
    return int(normalize_answer(prediction) == normalize_answer(gold))


def answer_f1(prediction: str, gold: str) -> float:
    pred_toks = normalize_answer(prediction).split()
    gold_toks = normalize_answer(gold).split()
    if not pred_toks or not gold_toks:
        return float(pred_toks == gold_toks)
    common = sum((Counter(pred_toks) & Counter(gold_toks)).values())
    return 2 * common / (len(pred_toks) + len(gold_toks))


def overlaps(prediction: str, target: str, threshold: Optional[float] = None) -> bool:
    if not normalize_answer(prediction):
        return False
    limit = _lexicon.overlap_threshold if threshold is None else threshold
    return answer_f1(prediction, target) >= limit
