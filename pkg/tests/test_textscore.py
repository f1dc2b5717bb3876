import hashlib

import pytest

from tmn import textscore
from tmn.core import EMPTY_CONTEXT, Chain, ChainStep, Context, ModelId
from tmn.errors import EmptyQuestion
from tmn.textscore import (
    ChainMetrics,
    answer_em,
    answer_f1,
    chain_metrics,
    essential_words,
    mu_of,
    normalize_answer,
    nu_of,
    overlaps,
    passes_filter,
    theta_of,
    tokenize,
    zeta,
)

from conftest import FIXTURES, SERVICES_QUESTION

SERVICES_STEPS = [
    ("In what year did the services sector rebound?", "2003"),
    ("When did the services sector start to take a dip?", "2002"),
    ("diff(2003, 2002)", "1"),
]


def test_stopword_list_is_pinned():
    expected = (FIXTURES / "stopwords.sha256").read_text().split()[0]
    data = (textscore.resources.files("tmn.resources") / "stopwords.txt").read_bytes()
    assert hashlib.sha256(data).hexdigest() == expected


def test_essential_words():
    assert essential_words(SERVICES_QUESTION) == {"many", "years", "take", "services", "sector", "rebound"}
    assert essential_words("") == set()
    assert essential_words("the of and") == set()


def test_essential_words_idempotent():
    phi = essential_words(SERVICES_QUESTION)
    assert essential_words(" ".join(phi)) == phi


def test_tokenize_keeps_numbers_whole():
    assert tokenize("It fell 7.8 percent, to 1,250 in 2002.") == ["it", "fell", "7.8", "percent", "to", "1,250", "in", "2002"]


class FakeTagger:
    def tag(self, text):
        return [(t, "VERB" if t == "rebound" else "X") for t in text.rstrip("?").split()]


def test_tagger_restricts_essential_words():
    textscore.configure(tagger=FakeTagger())
    assert essential_words(SERVICES_QUESTION) == {"rebound"}


def test_zeta():
    own, other = Context("alpha beta"), Context("beta gamma")
    assert zeta("alpha beta gamma", own, other) == {"alpha", "beta"}


def test_zeta_unchanged_without_exclusive_terms():
    own = Context("alpha beta")
    assert zeta("alpha beta gamma", own, EMPTY_CONTEXT) == {"alpha", "beta", "gamma"}
    assert zeta("alpha beta gamma", own, own) == {"alpha", "beta", "gamma"}


def test_zeta_literal_mode():
    textscore.configure(zeta_mode="literal")
    assert zeta("alpha beta gamma", Context("alpha beta"), Context("beta gamma")) == {"gamma"}


def test_theta_counts_new_words():
    assert theta_of(SERVICES_QUESTION, SERVICES_STEPS[:1]) == 0.0
    # "start" and "dip" are new; "year" and the calculator step are not
    assert theta_of(SERVICES_QUESTION, SERVICES_STEPS) == pytest.approx(2 / 6)


def test_theta_reuses_earlier_answers():
    steps = [("Who built the services sector?", "Alder"), ("When did Alder rebound?", "2003")]
    assert theta_of(SERVICES_QUESTION, steps) == pytest.approx(1 / 6)


def test_theta_is_monotone_under_extension():
    values = [theta_of(SERVICES_QUESTION, SERVICES_STEPS[:i]) for i in range(len(SERVICES_STEPS) + 1)]
    assert values == sorted(values)


def test_theta_empty_question():
    with pytest.raises(EmptyQuestion):
        theta_of("Is it the same?", SERVICES_STEPS)


def test_mu():
    # "many" and "years" are not covered by any sub-question
    assert mu_of(SERVICES_QUESTION, SERVICES_STEPS) == pytest.approx(2 / 6)
    assert mu_of(SERVICES_QUESTION, [(SERVICES_QUESTION, "1")]) == 0.0
    assert mu_of(SERVICES_QUESTION, [("Who wrote Hamlet?", "Shakespeare")]) == 1.0


def test_nu():
    assert nu_of(SERVICES_STEPS) == 0
    assert nu_of([("Who founded Rome?", "Romulus"), ("When was Carthage founded?", "814 BC")]) == 1
    assert nu_of(SERVICES_STEPS[:1]) == 0


def test_nu_counts_final_answer_reuse():
    steps = [("Which river?", "Danube"), ("Where does it end?", "the Danube delta")]
    assert nu_of(steps) == 0


def test_chain_metrics(services_question):
    steps = tuple(
        ChainStep(ModelId.CALC if q.startswith("diff") else ModelId.SQUAD, q, a)
        for q, a in SERVICES_STEPS
    )
    chain = Chain(question=services_question, steps=steps)
    metrics = chain_metrics(chain)
    assert metrics.theta == pytest.approx(2 / 6)
    assert metrics.mu == pytest.approx(2 / 6)
    assert metrics.nu == 0


@pytest.mark.parametrize(
    "metrics, kept",
    [
        (ChainMetrics(0.0, 0.0, 0), True),
        (ChainMetrics(0.35, 0.0, 0), False),
        (ChainMetrics(0.2, 0.25, 0), False),
        (ChainMetrics(0.3, 0.0, 0), False),
        (ChainMetrics(0.0, 0.3, 0), False),
        (ChainMetrics(0.2, 0.2, 0), False),
        (ChainMetrics(0.29, 0.1, 0), True),
        (ChainMetrics(0.0, 0.29, 0), True),
        (ChainMetrics(0.1, 0.29, 0), True),
        (ChainMetrics(4 / 35, 10 / 35, 0), False),
        (ChainMetrics(0.11, 0.29, 0), False),
        (ChainMetrics(0.0, 0.0, 1), False),
    ],
)
def test_passes_filter(metrics, kept):
    assert passes_filter(metrics) is kept


@pytest.mark.parametrize(
    "text, expected",
    [
        ("The Italian.", "italian"),
        ("87.4", "87.4"),
        ("  Chiwetel  Ejiofor ", "chiwetel ejiofor"),
        ("1,250 people!", "1250 people"),
        ("an apple, a pear", "apple pear"),
    ],
)
def test_normalize_answer(text, expected):
    assert normalize_answer(text) == expected


def test_answer_f1_and_em():
    assert answer_f1("Italian", "Italian") == 1.0
    assert answer_em("Italian", "Italian") == 1
    assert answer_f1("Chiwetel Ejiofor", "Chiwetel Umeadi Ejiofor") == pytest.approx(0.8)
    assert answer_em("Chiwetel Ejiofor", "Chiwetel Umeadi Ejiofor") == 0
    assert answer_f1("", "x") == 0.0
    assert answer_f1("", "") == 1.0
    assert answer_f1("The", "a") == 1.0


def test_answer_f1_symmetric():
    pairs = [("Chiwetel Ejiofor", "Chiwetel Umeadi Ejiofor"), ("red fox", "the quick red fox jumps")]
    for a, b in pairs:
        assert answer_f1(a, b) == answer_f1(b, a)


def test_overlaps():
    assert overlaps("Raymond S Persi", "Raymond S Persi")
    assert overlaps("Raymond S", "Raymond S Persi")
    assert not overlaps("Raymond", "Raymond S Persi")
    assert not overlaps("", "anything")


def test_overlap_threshold_is_configurable():
    textscore.configure(overlap_threshold=0.9)
    assert not overlaps("Raymond S", "Raymond S Persi")
    assert overlaps("Raymond", "Raymond S Persi", threshold=0.5)
