import pytest

from tmn.config import EngineConfig, SearchConfig
from tmn.core import EOQ_TOKEN, ChainStep, ComplexQuestion, ModelId, append_step, history_text, new_chain
from tmn.datagen import (
    build_decompositions,
    decompose,
    emit_nextgen_examples,
    emit_scorer_examples,
    filter_decompositions,
    prep_qgen_training,
    sample_scorer_chains,
)
from tmn.errors import NoGoldAnswer
from tmn.hints import Hint, HintChain, QuestionClass, classify, extract_hints
from tmn.models import (
    ModelRegistry,
    ScoredAnswer,
    ScriptedNextQuestionGenerator,
    TableQAModel,
    TemplateQuestionGenerator,
)
from tmn.textscore import TokenSet, essential_words

from conftest import SERVICES_QUESTION

Q_REBOUND = "In what year did the services sector rebound?"
Q_DIP = "When did the services sector take a dip?"


def squad_registry(answers, by_answer):
    return ModelRegistry(
        qa={ModelId.SQUAD: TableQAModel(answers)},
        subq_gen={ModelId.SQUAD: TemplateQuestionGenerator(by_answer)},
        nextgen=ScriptedNextQuestionGenerator({}),
    )


def services_chain(question, calc="diff(2003, 2002)", answer="1"):
    chain = new_chain(question)
    for step in [
        ChainStep(ModelId.SQUAD, Q_REBOUND, "2003"),
        ChainStep(ModelId.SQUAD, Q_DIP, "2002"),
        ChainStep(ModelId.CALC, calc, answer),
    ]:
        chain = append_step(chain, step, 0.0)
    return chain


async def test_build_decompositions_services(services_question, services_registry):
    hint_chains = extract_hints(services_question, classify(services_question))
    chains = await build_decompositions(services_question, hint_chains, services_registry)
    assert len(chains) == 4
    plain = [c for c in chains if c.steps[-1].question == "diff(2003, 2002)"]
    assert plain
    for chain in chains:
        assert chain.final_answer() == "1"
        assert [s.model for s in chain.steps] == [ModelId.SQUAD, ModelId.SQUAD, ModelId.CALC]
        assert {s.question for s in chain.steps[:2]} == {Q_REBOUND, Q_DIP}
    assert {c.steps[-1].question for c in chains} == {"diff(2003, 2002)", "diff(2003, 2002, years)"}
    assert [c.theta for c in chains] == sorted(c.theta for c in chains)


async def test_decompose_keeps_chains_that_cover_the_question(services_question, services_registry):
    kept = await decompose(services_question, services_registry, EngineConfig())
    assert len(kept) == 2
    for chain in kept:
        assert chain.steps[-1].question == "diff(2003, 2002, years)"
        assert chain.theta == pytest.approx(1 / 6)


async def test_decompose_skips_questions_without_gold(services_question, services_registry):
    q = services_question
    without_gold = ComplexQuestion(q.id, q.text, q.contexts)
    assert await decompose(without_gold, services_registry, EngineConfig()) == []


async def test_unanswerable_first_step_yields_nothing(services_question):
    registry = squad_registry({Q_DIP: "2002"}, {"2003": [Q_REBOUND], "2002": [Q_DIP]})
    hint_chains = extract_hints(services_question, {QuestionClass.DIFFERENCE})
    first_2003 = [c for c in hint_chains if c.hints[0].answer == "2003"]
    assert first_2003
    assert await build_decompositions(services_question, first_2003, registry) == []


async def test_build_decompositions_cap(services_question):
    rebound = [f"In what year number {i} did the services sector rebound?" for i in range(10)]
    dip = [f"When did the services sector take dip number {i}?" for i in range(6)]
    registry = squad_registry(
        {**{q: "2003" for q in rebound}, **{q: "2002" for q in dip}},
        {"2003": rebound, "2002": dip},
    )
    context = services_question.contexts[0]
    vocab = essential_words(SERVICES_QUESTION)
    hint_chain = HintChain(
        hints=(
            Hint(context, 0, "2003", vocab, ModelId.SQUAD, 1),
            Hint(context, 0, "2002", vocab, ModelId.SQUAD, 2),
        ),
        question_class=QuestionClass.DIFFERENCE,
    )
    chains = await build_decompositions(services_question, [hint_chain], registry, per_step=10, cap=50)
    assert len(chains) == 50
    assert len({tuple(s.question for s in c.steps) for c in chains}) == 50
    thetas = [c.theta for c in chains]
    assert thetas == sorted(thetas)

    few = await build_decompositions(services_question, [hint_chain], registry, per_step=2)
    assert len(few) == 4


class AlwaysAnswers:
    def __init__(self, text):
        self.text = text

    async def answer(self, question, context):
        return ScoredAnswer(text=self.text, score=1.0)


async def test_blank_generated_questions_are_dropped(services_question):
    registry = ModelRegistry(
        qa={ModelId.SQUAD: AlwaysAnswers("2003")},
        subq_gen={ModelId.SQUAD: TemplateQuestionGenerator({"2003": ["", "   ", Q_REBOUND]})},
        nextgen=ScriptedNextQuestionGenerator({}),
    )
    hint = Hint(services_question.contexts[0], 0, "2003", essential_words(SERVICES_QUESTION), ModelId.SQUAD, 1)
    hint_chain = HintChain(hints=(hint,), question_class=QuestionClass.DIFFERENCE)
    chains = await build_decompositions(services_question, [hint_chain], registry)
    assert [[s.question for s in c.steps] for c in chains] == [[Q_REBOUND]]


def test_filter_decompositions(services_question):
    chains = [services_chain(services_question), services_chain(services_question, "diff(2003, 2002, years)")]
    kept = filter_decompositions(chains)
    assert kept == [chains[1]]
    assert filter_decompositions(chains, mu_max=0.5, sum_max=0.6) == chains


def test_filter_drops_unused_answers(services_question):
    chain = services_chain(services_question, "diff(2004, 2002, years)", "2")
    assert filter_decompositions([chain], theta_max=1, mu_max=1, sum_max=2) == []


def test_emit_nextgen_examples(services_question):
    chain = services_chain(services_question, "diff(2003, 2002, years)")
    examples = emit_nextgen_examples([chain])
    assert [e.output for e in examples] == [
        f"(SQUAD) {Q_REBOUND}",
        f"(SQUAD) {Q_DIP}",
        "(CALC) diff(2003, 2002, years)",
        EOQ_TOKEN,
    ]
    assert examples[0].input == f"QC: {SERVICES_QUESTION}"
    assert examples[-1].input == history_text(SERVICES_QUESTION, chain.steps)
    assert examples[-1].to_dict() == {"input": examples[-1].input, "output": "[EOQ]"}


def test_emit_nextgen_examples_empty_and_duplicates(services_question):
    chain = services_chain(services_question)
    assert emit_nextgen_examples([]) == []
    assert len(emit_nextgen_examples([chain, chain])) == 8


def bangkok_chain(question, answer):
    step = ChainStep(ModelId.CALC, "not(12.6)", answer)
    return append_step(new_chain(question), step, 0.0)


def test_scorer_labels(table2_questions):
    q = table2_questions["bangkok"]
    chains = [
        bangkok_chain(q, "87.4"),
        bangkok_chain(q, "87.4 percent of people in this country live outside Bangkok"),
        bangkok_chain(q, "87.4 percent of people in this country live elsewhere"),
        bangkok_chain(q, "12.6"),
    ]
    labels = [e.label for e in emit_scorer_examples(q, chains)]
    # 10 tokens against 1 gives F1 2/11; 9 tokens against 1 gives exactly 0.2
    assert labels == ["positive", "negative", "positive", "negative"]


def test_scorer_examples_need_gold(table2_questions):
    q = table2_questions["bangkok"]
    with pytest.raises(NoGoldAnswer):
        emit_scorer_examples(ComplexQuestion(q.id, q.text, q.contexts), [])


async def test_sample_scorer_chains(services_question, services_registry):
    chains = await sample_scorer_chains(services_question, services_registry, SearchConfig())
    assert [c.final_answer() for c in chains] == ["1"]
    examples = emit_scorer_examples(services_question, chains)
    assert [e.label for e in examples] == ["positive"]
    assert examples[0].history.endswith("Q: diff(2003, 2002) A: 1")


async def test_sample_scorer_chains_without_completion(services_question, branching_registry):
    tight = SearchConfig(budget=1)
    assert await sample_scorer_chains(services_question, branching_registry, tight) == []


SQUAD_RECORDS = [
    {"context": "Paris is the capital of France.", "question": "What is the capital of France?", "answer": "Paris"},
    {"context": "Paris is the capital of France.", "question": "Which river flows through the French capital city?",
     "answer": "Seine"},
    {"context": "Paris is the capital of France.", "question": "How many people visited museums in 2019?",
     "answer": "9 million"},
    {"context": "The Nile is long.", "question": "Which continent holds the longest river?", "answer": "Africa"},
]


def test_prep_qgen_vocabulary_is_superset():
    examples = prep_qgen_training(SQUAD_RECORDS, seed=7)
    assert len(examples) == len(SQUAD_RECORDS)
    for record, example in zip(SQUAD_RECORDS, examples):
        phi = set(essential_words(record["question"]))
        vocab = set(example.vocabulary)
        assert phi <= vocab
        assert len(vocab) >= len(phi) + 2
        assert example.question == record["question"]
        assert example.to_dict()["vocab"] == list(example.vocabulary)


def test_prep_qgen_distractors_come_from_siblings():
    examples = prep_qgen_training(SQUAD_RECORDS[:3], seed=1)
    sibling_words = set(essential_words(SQUAD_RECORDS[1]["question"])) | set(
        essential_words(SQUAD_RECORDS[2]["question"])
    )
    own = set(essential_words(SQUAD_RECORDS[0]["question"]))
    assert set(examples[0].vocabulary) - own <= sibling_words


def test_prep_qgen_global_fallback():
    examples = prep_qgen_training(SQUAD_RECORDS, seed=3)
    lonely = examples[3]
    own = set(essential_words(SQUAD_RECORDS[3]["question"]))
    others = set()
    for record in SQUAD_RECORDS[:3]:
        others |= set(essential_words(record["question"]))
    distractors = set(lonely.vocabulary) - own
    assert distractors and distractors <= others


def test_prep_qgen_is_deterministic():
    first = [e.to_dict() for e in prep_qgen_training(SQUAD_RECORDS, seed=11)]
    second = [e.to_dict() for e in prep_qgen_training(SQUAD_RECORDS, seed=11)]
    assert first == second


def test_prep_qgen_single_record_has_no_distractors():
    [example] = prep_qgen_training(SQUAD_RECORDS[:1], seed=0)
    assert TokenSet(example.vocabulary) == essential_words(SQUAD_RECORDS[0]["question"])
