"""
Distant supervision front end.

Classifies a complex question into reasoning classes and extracts hint
chains: per-step (context, answer, vocabulary) tuples that condition the
sub-question generators when building training decompositions.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import permutations
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .calculator import (
    DATE_PATTERNS,
    NUMBER_PATTERN,
    UNITS,
    CalcValue,
    Date,
    Diff,
    IfThen,
    Not,
    Number,
    Text,
    eval_calc,
    format_value,
    match_operand,
)
from .core import EMPTY_CONTEXT, AnyContext, ComplexQuestion, Context, ModelId
from .errors import CalcError, NoGoldAnswer, ParseError
from .textscore import TokenSet, essential_words, normalize_answer, tokenize, zeta

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 20
DIFFERENCE_CAP = 50


class QuestionClass(Enum):
    DIFFERENCE = "difference"
    COMPARISON = "comparison"
    COMPLEMENTATION = "complementation"
    COMPOSITION = "composition"
    CONJUNCTION = "conjunction"
    OUT_OF_SCOPE = "out_of_scope"


class Patterns:
    """Class-identification regexes, matched against the lowercased question"""

    DIFFERENCE_MUST = [
        re.compile(p) for p in (
            r".*how many (days|months|years).*",
            r".*how many.*(days|months|years).* between .*",
            r".*how many.* shorter .+ than .*",
            r".*how many.* shorter .+ compar.*",
            r".*how many.* longer .+ than .*",
            r".*how many.* longer .+ compar.*",
            r".*how many.* less .+ than .*",
            r".*how many.* less .+ compar.*",
            r".*how many.* more .+ than .*",
            r".*how many.* more .+ compar.*",
            r".*difference.*",
        )
    ]
    DIFFERENCE_MUST_NOT = [
        re.compile(p) for p in (
            r".*minimum.*",
            r".*maximum.*",
            r".*longest.*",
            r".*shortest.*",
            r".*highest.*",
            r".*lowest.*",
            r".*first.*",
            r".*last.*",
            r".*second.*",
            r".*third.*",
            r".*fourth.*",
            r".*how many touchdown.*",
            r".*how many field goal.*",
            r".*how many point.*",
            r".*more touchdown.*",
            r".*more field goal.*",
            r".*more point.*",
        )
    ]
    COMPARISON = re.compile(r"([^,]+)[:,](.*) or (.*)\?", re.IGNORECASE)
    COMPLEMENTATION = re.compile(r"^(.*percent.*)(\Wnot\W|n't\W)(.*)$")


# Types

@dataclass(frozen=True)
class ValueMention:
    value: CalcValue
    char_span: Tuple[int, int]
    context_index: int
    surface: str


@dataclass(frozen=True)
class Hint:
    context: AnyContext
    context_index: Optional[int]
    answer: str
    vocabulary: TokenSet
    target: ModelId
    step_index: int

    def __post_init__(self):
        if self.step_index < 1:
            raise ValueError("hint step index starts at 1")
        if self.target is ModelId.CALC and not any(
            t in ("diff", "not", "if_then") for t in self.vocabulary
        ):
            raise ValueError("calculator hint needs a calculator function in its vocabulary")

    def to_dict(self) -> Dict[str, Any]:
        where: Dict[str, Any] = (
            {"empty": True} if self.context_index is None else {"context_index": self.context_index}
        )
        return {
            **where,
            "answer": self.answer,
            "vocab": self.vocabulary.to_list(),
            "target": self.target.value,
        }


@dataclass(frozen=True)
class HintChain:
    hints: Tuple[Hint, ...]
    question_class: QuestionClass

    def __post_init__(self):
        if [h.step_index for h in self.hints] != list(range(1, len(self.hints) + 1)):
            raise ValueError("hint step indices must be 1..k")

    def __len__(self) -> int:
        return len(self.hints)

    def __iter__(self):
        return iter(self.hints)

    def to_list(self) -> List[Dict[str, Any]]:
        return [h.to_dict() for h in self.hints]


HintStep = Tuple[AnyContext, Optional[int], str, Iterable[str], ModelId]


def _chain(question_class: QuestionClass, steps: Sequence[HintStep]) -> HintChain:
    return HintChain(
        hints=tuple(
            Hint(ctx, idx, answer, TokenSet(vocab), target, i)
            for i, (ctx, idx, answer, vocab, target) in enumerate(steps, 1)
        ),
        question_class=question_class,
    )


# Text helpers

def _mentions_answer(text: str, answer: str) -> bool:
    answer = answer.strip()
    if not answer:
        return False
    return re.search(r"(?<!\w)" + re.escape(answer) + r"(?!\w)", text, re.IGNORECASE) is not None


def _titled(question: ComplexQuestion) -> List[Tuple[int, Context]]:
    return [(i, c) for i, c in enumerate(question.contexts) if c.title][:2]


def find_title_mention(title: str, text: str) -> Optional[str]:
    """Longest contiguous word span of `title` occurring in `text`.

    Matching is case-insensitive and tolerant to punctuation between words;
    the span must contain at least one essential word of three or more
    characters. Returns the matched surface text.
    """
    words = re.findall(r"\w+", title)
    for length in range(len(words), 0, -1):
        for start in range(len(words) - length + 1):
            span = words[start:start + length]
            if not any(len(w) >= 3 for w in essential_words(" ".join(span))):
                continue
            pattern = r"(?<!\w)" + r"\W+".join(re.escape(w) for w in span) + r"(?!\w)"
            match = re.search(pattern, text, re.IGNORECASE)
            if match:
                return match.group(0)
    return None


# Classification

def comparison_entities(text: str) -> Optional[Tuple[str, str]]:
    match = Patterns.COMPARISON.match(text)
    if not match:
        return None
    e1, e2 = match.group(2).strip(), match.group(3).strip()
    if not e1 or not e2:
        return None
    return e1, e2


def _is_difference(lowered: str) -> bool:
    return any(p.match(lowered) for p in Patterns.DIFFERENCE_MUST) and not any(
        p.match(lowered) for p in Patterns.DIFFERENCE_MUST_NOT
    )


def _bridge_pairs(question: ComplexQuestion) -> List[Tuple[Tuple[int, Context], Tuple[int, Context]]]:
    titled = _titled(question)
    if len(titled) < 2:
        return []
    return list(permutations(titled, 2))


def classify(question: ComplexQuestion) -> FrozenSet[QuestionClass]:
    lowered = question.text.lower()
    classes: Set[QuestionClass] = set()
    if _is_difference(lowered):
        classes.add(QuestionClass.DIFFERENCE)
    if comparison_entities(question.text):
        classes.add(QuestionClass.COMPARISON)
    if Patterns.COMPLEMENTATION.match(lowered):
        classes.add(QuestionClass.COMPLEMENTATION)

    gold = question.gold_answer
    if gold:
        for (_, d1), (_, d2) in _bridge_pairs(question):
            in_d1, in_d2 = _mentions_answer(d1.text, gold), _mentions_answer(d2.text, gold)
            if in_d1 and in_d2:
                classes.add(QuestionClass.CONJUNCTION)
            elif in_d2 and not in_d1 and find_title_mention(d2.title or "", d1.text):
                classes.add(QuestionClass.COMPOSITION)

    if not classes:
        classes.add(QuestionClass.OUT_OF_SCOPE)
    return frozenset(classes)


# Value extraction

_TOKEN_SPAN = re.compile(r"\w+(?:[.,']\w+)*")


def _date_spans(text: str) -> List[Tuple[int, int]]:
    spans: List[Tuple[int, int]] = []
    for pattern in DATE_PATTERNS:
        for match in pattern.finditer(text):
            if match.start() > 0 and text[match.start() - 1].isalnum():
                continue
            span = (match.start(), match.end())
            if not any(s < span[1] and span[0] < e for s, e in spans):
                spans.append(span)
    return spans


def _token_index(text: str, offset: int) -> int:
    return len(_TOKEN_SPAN.findall(text[:offset]))


def extract_values(
    context: Context,
    near_entity: Optional[str] = None,
    window: int = DEFAULT_WINDOW,
    context_index: int = 0,
) -> List[ValueMention]:
    """Dates and numbers mentioned in `context`, one mention per span."""
    text = context.text
    candidates: List[Tuple[int, int]] = _date_spans(text)
    for match in NUMBER_PATTERN.finditer(text):
        start, end = match.span()
        if start > 0 and (text[start - 1].isalnum() or text[start - 1] in ".,-_"):
            continue
        if end < len(text) and (text[end].isalnum() or text[end] == "_"):
            continue
        # ranges such as "1683-99" are not values
        if text[end:end + 1] == "-" and text[end + 1:end + 2].isdigit():
            continue
        if any(s < end and start < e for s, e in candidates):
            continue
        candidates.append((start, end))
    candidates.sort()

    mentions: List[ValueMention] = []
    for start, end in candidates:
        surface = text[start:end]
        try:
            found = match_operand(surface)
        except ParseError:
            continue
        if found is None or found[1] != len(surface):
            continue
        mentions.append(ValueMention(found[0], (start, end), context_index, surface))

    if near_entity:
        anchors = [
            _token_index(text, m.start())
            for m in re.finditer(r"(?<!\w)" + re.escape(near_entity) + r"(?!\w)", text, re.IGNORECASE)
        ]
        mentions = [
            m for m in mentions
            if any(abs(_token_index(text, m.char_span[0]) - a) <= window for a in anchors)
        ]
    return mentions


# Hint extraction

def _same(result: str, gold: str) -> bool:
    return normalize_answer(result) == normalize_answer(gold)


def _evaluates_to(expr, gold: str) -> bool:
    try:
        return _same(eval_calc(expr), gold)
    except CalcError:
        return False


def _kind(value: CalcValue) -> str:
    if isinstance(value, Date):
        return "year" if value.year_only else "date"
    return "number"


def _difference_units(a: CalcValue, b: CalcValue) -> Tuple[Optional[str], ...]:
    kinds = {_kind(a), _kind(b)}
    if "number" in kinds:
        return (None,)
    if kinds == {"year"}:
        return (None, "years")
    return UNITS


def _difference_chains(question: ComplexQuestion, gold: str) -> List[HintChain]:
    phi = essential_words(question.text)
    scored: List[Tuple[int, HintChain]] = []
    for index, context in enumerate(question.contexts):
        mentions = extract_values(context, context_index=index)
        for m1, m2 in permutations(mentions, 2):
            if format_value(m1.value) == format_value(m2.value):
                continue
            for unit in _difference_units(m1.value, m2.value):
                if not _evaluates_to(Diff(m1.value, m2.value, unit), gold):
                    continue
                calc_vocab = ["diff", format_value(m1.value), format_value(m2.value)]
                if unit:
                    calc_vocab.append(unit)
                chain = _chain(QuestionClass.DIFFERENCE, [
                    (context, index, m1.surface, phi, ModelId.SQUAD),
                    (context, index, m2.surface, phi, ModelId.SQUAD),
                    (EMPTY_CONTEXT, None, gold, calc_vocab, ModelId.CALC),
                ])
                scored.append((abs(m1.char_span[0] - m2.char_span[0]), chain))
    scored.sort(key=lambda item: item[0])
    if len(scored) > DIFFERENCE_CAP:
        logger.debug("capping %d difference hint chains for %s", len(scored), question.id)
    return [chain for _, chain in scored[:DIFFERENCE_CAP]]


def _best_context_for(entity: str, titled: List[Tuple[int, Context]]) -> Optional[Tuple[int, Context]]:
    wanted = set(tokenize(entity))
    best = max(titled, key=lambda item: len(wanted & set(tokenize(item[1].title or ""))), default=None)
    if best is None or not wanted & set(tokenize(best[1].title or "")):
        return None
    return best


def _comparison_chains(question: ComplexQuestion, gold: str, window: int) -> List[HintChain]:
    entities = comparison_entities(question.text)
    if entities is None:
        return []
    e1, e2 = entities
    phi = essential_words(question.text)

    # (context for e1, its values, vocab) and the same for e2
    sides: List[Tuple[Tuple[int, Context], Tuple[int, Context], Iterable[str], Iterable[str]]] = []
    titled = _titled(question)
    c1, c2 = _best_context_for(e1, titled), _best_context_for(e2, titled)
    if c1 and c2 and c1[0] != c2[0]:
        sides.append((c1, c2, zeta(question.text, c1[1], c2[1]), zeta(question.text, c2[1], c1[1])))
    else:
        for index, context in enumerate(question.contexts):
            pair = (index, context)
            sides.append((pair, pair, phi - tokenize(e2), phi - tokenize(e1)))

    chains: List[HintChain] = []
    for (i1, d1), (i2, d2), v1, v2 in sides:
        near1 = extract_values(d1, near_entity=None if i1 != i2 else e1, window=window, context_index=i1)
        near2 = extract_values(d2, near_entity=None if i1 != i2 else e2, window=window, context_index=i2)
        for m1 in near1:
            for m2 in near2:
                if format_value(m1.value) == format_value(m2.value):
                    continue
                if not any(
                    _evaluates_to(IfThen(m1.value, op, m2.value, Text(e1), Text(e2)), gold)
                    for op in ("<", ">")
                ):
                    continue
                chains.append(_chain(QuestionClass.COMPARISON, [
                    (d1, i1, m1.surface, v1, ModelId.SQUAD),
                    (d2, i2, m2.surface, v2, ModelId.SQUAD),
                    (EMPTY_CONTEXT, None, gold,
                     ["if_then", format_value(m1.value), format_value(m2.value), e1, e2], ModelId.CALC),
                ]))
    return chains


def _complementation_chains(question: ComplexQuestion, gold: str) -> List[HintChain]:
    phi = essential_words(question.text)
    chains: List[HintChain] = []
    for index, context in enumerate(question.contexts):
        for mention in extract_values(context, context_index=index):
            if not isinstance(mention.value, Number):
                continue
            if not _evaluates_to(Not(mention.value), gold):
                continue
            chains.append(_chain(QuestionClass.COMPLEMENTATION, [
                (context, index, mention.surface, phi, ModelId.SQUAD),
                (EMPTY_CONTEXT, None, gold, ["not", format_value(mention.value)], ModelId.CALC),
            ]))
    return chains


def _bridge_chains(question: ComplexQuestion, gold: str, classes: FrozenSet[QuestionClass]) -> List[HintChain]:
    chains: List[HintChain] = []
    for (i1, d1), (i2, d2) in _bridge_pairs(question):
        in_d1, in_d2 = _mentions_answer(d1.text, gold), _mentions_answer(d2.text, gold)
        if QuestionClass.CONJUNCTION in classes and in_d1 and in_d2 and i1 < i2:
            chains.append(_chain(QuestionClass.CONJUNCTION, [
                (d1, i1, gold, zeta(question.text, d1, d2), ModelId.SQUAD),
                (d2, i2, gold, zeta(question.text, d2, d1), ModelId.SQUAD),
            ]))
        if QuestionClass.COMPOSITION in classes and in_d2 and not in_d1:
            e1 = find_title_mention(d2.title or "", d1.text)
            if e1 is None:
                continue
            chains.append(_chain(QuestionClass.COMPOSITION, [
                (d1, i1, e1, zeta(question.text, d1, d2), ModelId.SQUAD),
                (d2, i2, gold, zeta(question.text, d2, d1) | tokenize(e1), ModelId.SQUAD),
            ]))
    return chains


def extract_hints(
    question: ComplexQuestion,
    classes: Iterable[QuestionClass],
    window: int = DEFAULT_WINDOW,
) -> List[HintChain]:
    gold = question.gold_answer
    if gold is None or not gold.strip():
        raise NoGoldAnswer(question.id)
    classes = frozenset(classes)
    chains: List[HintChain] = []
    if QuestionClass.DIFFERENCE in classes:
        chains.extend(_difference_chains(question, gold))
    if QuestionClass.COMPARISON in classes:
        chains.extend(_comparison_chains(question, gold, window))
    if QuestionClass.COMPLEMENTATION in classes:
        chains.extend(_complementation_chains(question, gold))
    if classes & {QuestionClass.COMPOSITION, QuestionClass.CONJUNCTION}:
        chains.extend(_bridge_chains(question, gold, classes))
    logger.debug("%s: %d hint chains for %s", question.id, len(chains), sorted(c.value for c in classes))
    return chains


def in_scope(question: ComplexQuestion) -> bool:
    classes = classify(question)
    if classes == {QuestionClass.OUT_OF_SCOPE} or not question.gold_answer:
        return False
    return bool(extract_hints(question, classes))


@dataclass
class HintRecord:
    """Classification and hints of one question, as written by `tmn classify`"""
    question: ComplexQuestion
    classes: FrozenSet[QuestionClass]
    chains: List[HintChain] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.question.id,
            "classes": sorted(c.value for c in self.classes),
            "chains": [chain.to_list() for chain in self.chains],
        }


def analyze(question: ComplexQuestion, window: int = DEFAULT_WINDOW) -> HintRecord:
    classes = classify(question)
    chains: List[HintChain] = []
    if classes != {QuestionClass.OUT_OF_SCOPE} and question.gold_answer:
        chains = extract_hints(question, classes, window=window)
    return HintRecord(question=question, classes=classes, chains=chains)
