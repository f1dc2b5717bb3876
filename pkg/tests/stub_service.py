"""In-process sub-model service used to exercise the HTTP clients."""

from fastapi import FastAPI

from tmn.core import history_text
from tmn.schemas import (
    AnswerRequest,
    AnswerResponse,
    GenerateRequest,
    GenerateResponse,
    NextCandidateOut,
    NextRequest,
    NextResponse,
    ScoreRequest,
    ScoreResponse,
)

QC = "How many years did it take for the services sector to rebound?"
STEPS = [
    ("In what year did the services sector rebound?", "2003", "(SQUAD) In what year did the services sector rebound?"),
    ("When did the services sector take a dip?", "2002", "(SQUAD) When did the services sector take a dip?"),
    ("diff(2003, 2002)", "1", "(CALC) diff(2003, 2002)"),
]

ANSWERS = {q: a for q, a, _ in STEPS[:2]}
SCRIPT = {
    history_text(QC, [(q, a) for q, a, _ in STEPS[:i]]): surface
    for i, (_, _, surface) in enumerate(STEPS)
}
SCRIPT[history_text(QC, [(q, a) for q, a, _ in STEPS])] = "[EOQ]"

app = FastAPI()


@app.post("/answer", response_model=AnswerResponse)
def answer(request: AnswerRequest):
    text = ANSWERS.get(request.question)
    if text is None or text not in request.context:
        return AnswerResponse(answer=None, score=0.0)
    return AnswerResponse(answer=text, score=0.9)


@app.post("/generate", response_model=GenerateResponse)
def generate(request: GenerateRequest):
    questions = [q for q, a in ANSWERS.items() if a == request.answer]
    questions.append(f"What about {' '.join(request.vocab)}?")
    return GenerateResponse(questions=questions[: request.count])


@app.post("/next", response_model=NextResponse)
def next_question(request: NextRequest):
    surface = SCRIPT.get(request.history)
    if surface is None:
        return NextResponse(candidates=[])
    return NextResponse(candidates=[NextCandidateOut(text=surface, logprob=-0.1)])


@app.post("/score", response_model=ScoreResponse)
def score(request: ScoreRequest):
    return ScoreResponse(negative_prob=0.05 if request.history.endswith("A: 1") else 0.5)
