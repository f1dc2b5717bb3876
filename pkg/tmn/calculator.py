"""
Symbolic calculator sub-model.

Questions use a small function-call language::

    diff(8 January 1706, 25 December 1705, days)
    not(12.6)
    if_then(12.2 < 6.1, Irish, Italian)

`parse_calc_question` turns the surface text into an expression tree,
`eval_calc` evaluates it, and `enumerate_calc_questions` produces every
question over a set of context values that evaluates to a target answer.
"""

from __future__ import annotations

import datetime
import logging
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from itertools import combinations, permutations
from typing import Collection, List, Optional, Sequence, Tuple, Union

from dateutil.relativedelta import relativedelta

from .errors import IncomparableOperands, ParseError, UnitMismatch

logger = logging.getLogger(__name__)

UNITS = ("days", "months", "years")
FUNCTIONS = ("diff", "not", "if_then")
OPERATORS = ("<", ">", "≠")

_UNIT_ALIASES = {
    "day": "days", "days": "days",
    "month": "months", "months": "months",
    "year": "years", "years": "years",
}

MONTHS = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)

_MONTH_LOOKUP = {name.lower(): i + 1 for i, name in enumerate(MONTHS)}
_MONTH_LOOKUP.update({name[:3].lower(): i + 1 for i, name in enumerate(MONTHS)})
_MONTH_LOOKUP["sept"] = 9

_MONTH = r"(?P<month>" + "|".join(
    sorted(_MONTH_LOOKUP, key=len, reverse=True)
) + r")\.?"

DATE_PATTERNS = (
    re.compile(
        r"(?P<day>\d{1,2})(?:st|nd|rd|th)?\s+" + _MONTH + r",?\s+(?P<year>\d{4})(?!\d)",
        re.IGNORECASE,
    ),
    re.compile(
        _MONTH + r"\s+(?P<day>\d{1,2})(?:st|nd|rd|th)?,?\s+(?P<year>\d{4})(?!\d)",
        re.IGNORECASE,
    ),
    re.compile(_MONTH + r",?\s+(?P<year>\d{4})(?!\d)", re.IGNORECASE),
)

NUMBER_PATTERN = re.compile(
    r"(?P<number>-?(?:\d{1,3}(?:,\d{3})+(?!\d)|\d+)(?:\.\d+)?|-?\.\d+)"
    r"(?P<percent>\s*%)?"
)

YEAR_RANGE = (1000, 2999)

_NAME_RE = re.compile(r"[A-Za-z_]+")


# Values

@dataclass(frozen=True)
class Number:
    value: Decimal
    percent: bool = False


@dataclass(frozen=True)
class Date:
    """Calendar date; `precision` records which parts were given explicitly."""
    year: int
    month: int = 1
    day: int = 1
    precision: str = "day"

    def __post_init__(self):
        if self.precision not in ("day", "month", "year"):
            raise ValueError(f"unknown date precision {self.precision!r}")
        datetime.date(self.year, self.month, self.day)

    @property
    def imputed(self) -> bool:
        return self.precision != "day"

    @property
    def year_only(self) -> bool:
        return self.precision == "year"

    def to_date(self) -> datetime.date:
        return datetime.date(self.year, self.month, self.day)


@dataclass(frozen=True)
class Text:
    value: str


CalcValue = Union[Number, Date, Text]


# Expressions

@dataclass(frozen=True)
class Diff:
    x: CalcValue
    y: CalcValue
    unit: Optional[str] = None


@dataclass(frozen=True)
class Not:
    x: CalcValue


@dataclass(frozen=True)
class IfThen:
    x: CalcValue
    op: str
    y: CalcValue
    then: Text
    else_: Text


CalcExpression = Union[Diff, Not, IfThen]


# Operand parsing

def match_operand(text: str, pos: int = 0) -> Optional[Tuple[CalcValue, int]]:
    """Match a date or number starting exactly at `pos`.

    Returns the value and the end offset, or None when nothing matches.
    Dates are tried before numbers so "8 January 1706" is not read as 8.
    """
    for pattern in DATE_PATTERNS:
        match = pattern.match(text, pos)
        if match is None:
            continue
        month = _MONTH_LOOKUP[match.group("month").lower()]
        year = int(match.group("year"))
        day_text = match.groupdict().get("day")
        try:
            if day_text is None:
                return Date(year, month, 1, precision="month"), match.end()
            return Date(year, month, int(day_text)), match.end()
        except ValueError:
            raise ParseError(pos, "invalid calendar date", match.group(0))

    match = NUMBER_PATTERN.match(text, pos)
    if match is None:
        return None
    raw = match.group("number")
    percent = match.group("percent") is not None
    if (
        not percent
        and re.fullmatch(r"\d{4}", raw)
        and YEAR_RANGE[0] <= int(raw) <= YEAR_RANGE[1]
    ):
        return Date(int(raw), precision="year"), match.end()
    try:
        value = Decimal(raw.replace(",", ""))
    except InvalidOperation:
        raise ParseError(pos, "invalid number", raw)
    return Number(value, percent=percent), match.end()


def parse_operand(text: str) -> CalcValue:
    """Parse a complete operand string such as "12.6%" or "May 2003"."""
    stripped = text.strip()
    found = match_operand(stripped)
    if found is None or found[1] != len(stripped):
        raise ParseError(0, "unsupported operand format", text)
    return found[0]


class Parser:
    """Recursive-descent parser for calculator questions."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, reason: str) -> ParseError:
        return ParseError(self.pos, reason, self.text)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, char: str):
        if self.peek() != char:
            found = self.peek() or "end of input"
            raise self.error(f"expected {char!r}, found {found!r}")
        self.pos += 1

    def name(self) -> str:
        self.skip_ws()
        match = _NAME_RE.match(self.text, self.pos)
        if match is None:
            raise self.error("expected a function name")
        self.pos = match.end()
        return match.group(0)

    def operand(self, terminators: str) -> CalcValue:
        self.skip_ws()
        start = self.pos
        found = match_operand(self.text, self.pos)
        if found is None:
            raise self.error("unsupported operand format")
        value, end = found
        self.pos = end
        nxt = self.peek()
        if not nxt or nxt not in terminators:
            self.pos = start
            raise self.error("unsupported operand format")
        return value

    def operator(self) -> str:
        self.skip_ws()
        if self.text.startswith("!=", self.pos):
            self.pos += 2
            return "≠"
        char = self.peek()
        if char in OPERATORS:
            self.pos += 1
            return char
        if char == "=":
            raise self.error("unsupported comparison '='")
        raise self.error("expected one of <, >, ≠")

    def branch(self) -> Text:
        """Branch text up to the next top-level comma or closing parenthesis;
        a backslash makes the following character literal."""
        self.skip_ws()
        chars: List[str] = []
        depth = 0
        while self.pos < len(self.text):
            char = self.text[self.pos]
            if char == "\\" and self.pos + 1 < len(self.text):
                chars.append(self.text[self.pos + 1])
                self.pos += 2
                continue
            if char == "(":
                depth += 1
            elif char == ")":
                if depth == 0:
                    break
                depth -= 1
            elif char == "," and depth == 0:
                break
            chars.append(char)
            self.pos += 1
        value = "".join(chars).strip()
        if not value:
            raise self.error("empty branch")
        return Text(value)

    def unit(self) -> str:
        word = self.name().lower()
        if word not in _UNIT_ALIASES:
            raise self.error(f"unknown unit {word!r}")
        return _UNIT_ALIASES[word]

    def parse(self) -> CalcExpression:
        function = self.name().lower()
        if function not in FUNCTIONS:
            raise ParseError(0, f"unknown function {function!r}", self.text)
        self.expect("(")
        expr: CalcExpression
        if function == "diff":
            x = self.operand(",")
            self.expect(",")
            y = self.operand(",)")
            unit = None
            if self.peek() == ",":
                self.pos += 1
                unit = self.unit()
            expr = Diff(x, y, unit)
        elif function == "not":
            expr = Not(self.operand(")"))
        else:
            x = self.operand("<>≠!=")
            op = self.operator()
            y = self.operand(",")
            self.expect(",")
            then = self.branch()
            self.expect(",")
            else_ = self.branch()
            expr = IfThen(x, op, y, then, else_)
        self.expect(")")
        if self.peek():
            raise self.error("trailing characters")
        return expr


def parse_calc_question(text: str) -> CalcExpression:
    return Parser(text).parse()


# Evaluation

def _as_number(value: CalcValue) -> Optional[Number]:
    if isinstance(value, Number):
        return value
    if isinstance(value, Date) and value.year_only:
        return Number(Decimal(value.year))
    return None


def _coerce_pair(x: CalcValue, y: CalcValue) -> Tuple[CalcValue, CalcValue]:
    """Bring two operands to a common kind (both Number or both Date)."""
    if isinstance(x, Text) or isinstance(y, Text):
        raise IncomparableOperands(f"text operand in {x!r}, {y!r}")
    if type(x) is type(y):
        return x, y
    nx, ny = _as_number(x), _as_number(y)
    if nx is None or ny is None:
        raise IncomparableOperands(f"cannot compare {x!r} with {y!r}")
    return nx, ny


def _sort_key(value: CalcValue):
    if isinstance(value, Number):
        return (value.value,)
    return (value.year, value.month, value.day)


def completed_units(later: datetime.date, earlier: datetime.date, unit: str) -> int:
    """Whole units elapsed from `earlier` to `later` (later >= earlier)."""
    if unit == "days":
        return (later - earlier).days
    delta = relativedelta(later, earlier)
    months = delta.years * 12 + delta.months
    return months if unit == "months" else months // 12


def _eval_diff(expr: Diff) -> Decimal:
    x, y = _coerce_pair(expr.x, expr.y)
    if isinstance(x, Number) and isinstance(y, Number):
        if expr.unit is not None:
            raise UnitMismatch(f"unit {expr.unit!r} given for numbers")
        return abs(x.value - y.value)
    assert isinstance(x, Date) and isinstance(y, Date)
    unit = expr.unit
    if unit is None:
        unit = "years" if x.year_only and y.year_only else "days"
    later, earlier = sorted((x.to_date(), y.to_date()), reverse=True)
    return Decimal(completed_units(later, earlier, unit))


def _compare(x: CalcValue, op: str, y: CalcValue) -> bool:
    x, y = _coerce_pair(x, y)
    kx, ky = _sort_key(x), _sort_key(y)
    if op == "<":
        return kx < ky
    if op == ">":
        return kx > ky
    return kx != ky


def format_decimal(value: Decimal) -> str:
    text = format(value.normalize(), "f")
    return "0" if text in ("-0", "0") else text


def eval_calc(expr: CalcExpression) -> str:
    if isinstance(expr, Diff):
        return format_decimal(_eval_diff(expr))
    if isinstance(expr, Not):
        number = _as_number(expr.x)
        if number is None:
            raise IncomparableOperands(f"not() needs a number, got {expr.x!r}")
        return format_decimal(Decimal(100) - number.value)
    if isinstance(expr, IfThen):
        holds = _compare(expr.x, expr.op, expr.y)
        return expr.then.value if holds else expr.else_.value
    raise TypeError(f"not a calculator expression: {expr!r}")


def calculate(question: str) -> str:
    return eval_calc(parse_calc_question(question))


# Rendering

def format_value(value: CalcValue) -> str:
    if isinstance(value, Number):
        return format_decimal(value.value) + ("%" if value.percent else "")
    if isinstance(value, Date):
        if value.precision == "year":
            return str(value.year)
        month = MONTHS[value.month - 1]
        if value.precision == "month":
            return f"{month} {value.year}"
        return f"{value.day} {month} {value.year}"
    return value.value


_BRANCH_SPECIALS_RE = re.compile(r"([\\,()])")


def escape_branch(text: str) -> str:
    return _BRANCH_SPECIALS_RE.sub(r"\\\1", text)


def render_expression(expr: CalcExpression) -> str:
    if isinstance(expr, Diff):
        args = [format_value(expr.x), format_value(expr.y)]
        if expr.unit:
            args.append(expr.unit)
        return f"diff({', '.join(args)})"
    if isinstance(expr, Not):
        return f"not({format_value(expr.x)})"
    return (
        f"if_then({format_value(expr.x)} {expr.op} {format_value(expr.y)}, "
        f"{escape_branch(expr.then.value)}, {escape_branch(expr.else_.value)})"
    )


# Question enumeration (the calculator's question generator)

def _kind(value: CalcValue) -> str:
    if isinstance(value, Number):
        return "number"
    if isinstance(value, Date):
        return "year" if value.year_only else "date"
    return "text"


def _diff_units(a: CalcValue, b: CalcValue, unit_hint: Optional[str]) -> Sequence[Optional[str]]:
    kinds = {_kind(a), _kind(b)}
    if "number" in kinds:
        return (None,)
    if kinds == {"year"}:
        return (None, unit_hint) if unit_hint else (None,)
    return (unit_hint,) if unit_hint else UNITS


def _try_eval(expr: CalcExpression) -> Optional[str]:
    try:
        return eval_calc(expr)
    except (IncomparableOperands, UnitMismatch):
        return None


def enumerate_calc_questions(
    values: Sequence[CalcValue],
    entity_pair: Optional[Tuple[str, str]],
    target_answer: str,
    unit_hint: Optional[str] = None,
    functions: Optional[Collection[str]] = None,
) -> List[str]:
    """All calculator questions over `values` whose answer matches `target_answer`."""
    from .textscore import normalize_answer

    allowed = set(functions) if functions is not None else set(FUNCTIONS)
    if unit_hint is not None:
        unit_hint = _UNIT_ALIASES.get(unit_hint.lower(), unit_hint)

    unique: List[CalcValue] = []
    seen = set()
    for value in values:
        if isinstance(value, Text):
            continue
        key = format_value(value)
        if key not in seen:
            seen.add(key)
            unique.append(value)

    candidates: List[CalcExpression] = []
    if "diff" in allowed:
        for a, b in combinations(unique, 2):
            try:
                ca, cb = _coerce_pair(a, b)
            except IncomparableOperands:
                continue
            if _sort_key(ca) < _sort_key(cb):
                a, b = b, a
            for unit in _diff_units(a, b, unit_hint):
                candidates.append(Diff(a, b, unit))
    if "not" in allowed:
        for value in unique:
            if isinstance(value, Number) and Decimal(0) <= value.value <= Decimal(100):
                candidates.append(Not(value))
    if "if_then" in allowed and entity_pair is not None:
        then, else_ = Text(entity_pair[0]), Text(entity_pair[1])
        for a, b in permutations(unique, 2):
            for op in ("<", ">"):
                candidates.append(IfThen(a, op, b, then, else_))
        for a, b in combinations(unique, 2):
            candidates.append(IfThen(a, "≠", b, then, else_))

    target = normalize_answer(target_answer)
    questions: List[str] = []
    for expr in candidates:
        result = _try_eval(expr)
        if result is None or normalize_answer(result) != target:
            continue
        question = render_expression(expr)
        if question not in questions:
            questions.append(question)
    logger.debug("enumerated %d calculator questions for %r", len(questions), target_answer)
    return questions
