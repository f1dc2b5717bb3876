import json
from decimal import Decimal
from pathlib import Path

import pytest

from tmn import textscore
from tmn.calculator import format_decimal
from tmn.config import load_config
from tmn.core import ComplexQuestion, Context
from tmn.hints import QuestionClass
from tmn.models import build_registry

FIXTURES = Path(__file__).parent / "fixtures"

SERVICES_QUESTION = "How many years did it take for the services sector to rebound?"


@pytest.fixture(autouse=True)
def default_lexicon():
    textscore.configure()
    yield
    textscore.configure()


def load_questions(name):
    with open(FIXTURES / name, encoding="utf-8") as f:
        return [ComplexQuestion.from_record(json.loads(line)) for line in f if line.strip()]


@pytest.fixture
def services_question():
    return load_questions("services.jsonl")[0]


@pytest.fixture
def table2_questions():
    return {q.id: q for q in load_questions("table2.jsonl")}


@pytest.fixture
def services_registry():
    config = load_config(FIXTURES / "services.json")
    return build_registry(config, base_dir=FIXTURES)


@pytest.fixture
def branching_registry():
    config = load_config(FIXTURES / "branching.json")
    return build_registry(config, base_dir=FIXTURES)


# Synthetic corpus: ten questions for each reasoning class

_TOWNS = ["Ashford", "Brampton", "Carlow", "Dunmore", "Elgin", "Fenwick", "Galway", "Hexham", "Ilkley", "Jarrow"]
_GROUPS = [
    ("German", "Polish"), ("Irish", "Italian"), ("Dutch", "Swedish"), ("Greek", "Czech"), ("Welsh", "Scottish"),
    ("French", "Spanish"), ("Danish", "Finnish"), ("Hungarian", "Austrian"), ("Russian", "Ukrainian"),
    ("Norwegian", "Belgian"),
]
_FILMS = [
    ("Paper Lanterns", "Alma Reyes", "Mexican"), ("Harbour Lights", "Tomas Lindqvist", "Swedish"),
    ("Quiet Orchard", "Niamh Brennan", "Irish"), ("Copper Hills", "Kenji Morimoto", "Japanese"),
    ("Salt Roads", "Farid Haddad", "Lebanese"), ("Winter Reeds", "Ingrid Solberg", "Norwegian"),
    ("Glass Rivers", "Mateus Prado", "Brazilian"), ("Amber Fields", "Oskar Wolny", "Polish"),
    ("Stone Gardens", "Lucia Ferraro", "Italian"), ("Velvet Dunes", "Samir Naidoo", "Indian"),
]
_LANDMARKS = [
    ("Louvre", "Eiffel Tower", "Paris"), ("Colosseum", "Pantheon", "Rome"), ("Prado", "Retiro Park", "Madrid"),
    ("Rijksmuseum", "Vondelpark", "Amsterdam"), ("Hermitage", "Kazan Cathedral", "Petersburg"),
    ("Acropolis", "Plaka", "Athens"), ("Uffizi", "Ponte Vecchio", "Florence"),
    ("Reichstag", "Tiergarten", "Berlin"), ("Belvedere", "Prater", "Vienna"), ("Alhambra", "Generalife", "Granada"),
]


def synthetic_corpus():
    """(question, expected class) pairs covering every in-scope class."""
    corpus = []
    for i, town in enumerate(_TOWNS):
        founded, charter = 1600 + 13 * i, 1650 + 17 * i
        corpus.append((ComplexQuestion(
            id=f"difference-{i}",
            text=f"How many years passed between the founding of {town} and its charter?",
            contexts=(Context(f"{town} was founded in {founded}. It received its charter in {charter}."),),
            gold_answer=str(charter - founded),
        ), QuestionClass.DIFFERENCE))
    for i, (a, b) in enumerate(_GROUPS):
        n1, n2 = f"{10 + i}.4", f"{3 + i}.7"
        corpus.append((ComplexQuestion(
            id=f"comparison-{i}",
            text=f"Which group is larger: {a} or {b}?",
            contexts=(Context(f"{n1}% of residents reported {a} ancestry, while {n2}% reported {b} ancestry."),),
            gold_answer=a,
        ), QuestionClass.COMPARISON))
    for i, town in enumerate(_TOWNS):
        share = f"{12 + 3 * i}.5"
        corpus.append((ComplexQuestion(
            id=f"complementation-{i}",
            text=f"How many percent of people in {town} are not farmers?",
            contexts=(Context(f"In {town}, {share} percent of people are farmers."),),
            gold_answer=format_decimal(Decimal(100) - Decimal(share)),
        ), QuestionClass.COMPLEMENTATION))
    for i, (film, person, nationality) in enumerate(_FILMS):
        corpus.append((ComplexQuestion(
            id=f"composition-{i}",
            text=f"{film} was directed by a person of what nationality?",
            contexts=(
                Context(f"{film} is a short film directed by {person}.", title=film),
                Context(f"{person} is a {nationality} director.", title=person),
            ),
            gold_answer=nationality,
        ), QuestionClass.COMPOSITION))
    for i, (first, second, city) in enumerate(_LANDMARKS):
        corpus.append((ComplexQuestion(
            id=f"conjunction-{i}",
            text=f"Which city is home to both the {first} and the {second}?",
            contexts=(
                Context(f"The {first} is located in {city}.", title=first),
                Context(f"The {second} stands in {city}.", title=second),
            ),
            gold_answer=city,
        ), QuestionClass.CONJUNCTION))
    return corpus
