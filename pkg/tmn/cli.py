"""
tmn - command line interface

Usage:
    tmn classify DATASET [-o HINTS]                  # classes and hint chains per question
    tmn datagen DATASET --emit nextgen -o OUT        # next-question generator examples
    tmn datagen DATASET --emit scorer -o OUT         # chain scorer examples
    tmn datagen SQUAD --emit qgen -o OUT             # question generator examples
    tmn answer DATASET [--greedy] [-o PREDICTIONS]   # answers with explanation chains
    tmn eval PREDICTIONS GOLD [--json]               # EM / F1 report

Global options (before the command): --config, --seed, --jobs, --log-level,
--schedule {default,footnote}.
"""

import asyncio
import hashlib
import json
import logging
import random
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Awaitable, Callable, Dict, Iterator, List, Sequence, Type, TypeVar

import click
from pydantic import BaseModel, ValidationError
from rich.table import Table

from . import textscore
from .config import SEARCH_PRESETS, EngineConfig, load_config
from .core import ComplexQuestion
from .datagen import (
    decompose,
    emit_nextgen_examples,
    emit_scorer_examples,
    prep_qgen_training,
    sample_scorer_chains,
)
from .errors import DatasetError, NoChainFound, TmnError
from .hints import QuestionClass, analyze
from .log import err_console as console
from .log import setup_logging
from .models.registry import build_registry
from .schemas import GoldRecord, PredictionRecord, QuestionRecord, SquadRecord
from .search import answer_question, evaluate

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)
T = TypeVar("T")


@dataclass
class State:
    config: EngineConfig
    base_dir: Path


# JSONL helpers

def read_jsonl(path: str, model: Type[M]) -> List[M]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                records.append(model.model_validate(json.loads(line)))
            except json.JSONDecodeError as e:
                raise DatasetError(path, lineno, f"malformed JSON ({e.msg})") from e
            except ValidationError as e:
                raise DatasetError(path, lineno, f"invalid record: {e.errors()[0]['msg']}") from e
    return records


def read_questions(path: str) -> List[ComplexQuestion]:
    return [r.to_question() for r in read_jsonl(path, QuestionRecord)]


def dump(record: Dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False) + "\n"


def question_seed(seed: int, question_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{question_id}".encode("utf-8")).hexdigest()
    return int(digest[:8], 16)


def batches(items: Sequence[T], size: int) -> Iterator[Sequence[T]]:
    for start in range(0, len(items), size):
        yield items[start:start + size]


async def run_ordered(items: Sequence[T], worker: Callable[[T], Awaitable[Any]], jobs: int) -> List[Any]:
    """Run `worker` over items with at most `jobs` in flight; results keep input order."""
    semaphore = asyncio.Semaphore(jobs)

    async def guarded(item: T):
        async with semaphore:
            return await worker(item)

    return list(await asyncio.gather(*(guarded(item) for item in items)))


def fail(message: str):
    console.print(f"[red]Error: {message}[/red]")
    sys.exit(1)


def configure_lexicon(config: EngineConfig):
    tagger = None
    if config.pos_tagger:
        tagger = textscore.SpacyPosTagger(config.pos_tagger)
    textscore.configure(
        stopwords_path=config.stopwords_path,
        tagger=tagger,
        zeta_mode=config.zeta_mode,
        overlap_threshold=config.overlap_threshold,
    )


# Commands

@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON (or YAML) config file")
@click.option("--seed", type=int, help="Global random seed")
@click.option("--jobs", type=int, help="Questions processed concurrently")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.option("--schedule", type=click.Choice(sorted(SEARCH_PRESETS)), help="Sampling schedule preset")
@click.pass_context
def cli(ctx, config_path, seed, jobs, log_level, schedule):
    """Question decomposition engine"""
    setup_logging(log_level)
    overrides: Dict[str, Any] = {"seed": seed, "jobs": jobs}
    if schedule:
        overrides.update({f"search.{k}": v for k, v in SEARCH_PRESETS[schedule].items()})
    try:
        config = load_config(config_path, overrides)
        configure_lexicon(config)
    except TmnError as e:
        fail(str(e))
    base_dir = Path(config_path).resolve().parent if config_path else Path.cwd()
    ctx.obj = State(config=config, base_dir=base_dir)


@cli.command()
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", default="-", help="Output JSONL (default stdout)")
@click.pass_obj
def classify(state: State, dataset, output):
    """Classify questions and extract hint chains"""
    try:
        questions = read_questions(dataset)
    except TmnError as e:
        fail(str(e))

    counts: Counter = Counter()
    with click.open_file(output, "w", encoding="utf-8") as out:
        for question in questions:
            record = analyze(question, window=state.config.proximity_window)
            counts.update(c.value for c in record.classes)
            out.write(dump(record.to_dict()))

    table = Table(title=f"{len(questions)} questions")
    table.add_column("Class", style="cyan")
    table.add_column("Questions", justify="right")
    for question_class in QuestionClass:
        table.add_row(question_class.value, str(counts.get(question_class.value, 0)))
    console.print(table)


def _progress_path(output: str) -> Path:
    return Path(f"{output}.progress")


@cli.command()
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--emit", "kind", type=click.Choice(["nextgen", "scorer", "qgen"]), required=True)
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False), help="Output JSONL")
@click.option("--resume", is_flag=True, help="Continue an interrupted run from its progress file")
@click.pass_obj
def datagen(state: State, dataset, kind, output, resume):
    """Build training files for the neural sub-models"""
    config = state.config
    try:
        if kind == "qgen":
            records = read_jsonl(dataset, SquadRecord)
            examples = prep_qgen_training(
                [r.model_dump() for r in records],
                (config.datagen.distractor_min, config.datagen.distractor_max),
                seed=config.seed,
            )
            if config.datagen.shuffle:
                random.Random(config.seed).shuffle(examples)
            with open(output, "w", encoding="utf-8") as out:
                out.writelines(dump(e.to_dict()) for e in examples)
            console.print(f"[green]✓ {len(examples)} qgen examples from {len(records)} records[/green]")
            return

        questions = read_questions(dataset)
        required = ["squad_qa", "squad_gen"] if kind == "nextgen" else ["squad_qa", "nextgen"]
        config.check_endpoints(required, state.base_dir)
        written, skipped = asyncio.run(_datagen(state, questions, kind, output, resume))
    except TmnError as e:
        fail(f"{e} (progress kept in {_progress_path(output)}; rerun with --resume)"
             if _progress_path(output).exists() else str(e))

    if skipped:
        console.print(f"[yellow]Warning: {skipped} of {len(questions)} questions produced no examples[/yellow]")
    console.print(f"[green]✓ {written} {kind} examples from {len(questions)} questions[/green]")


async def _datagen(state: State, questions: List[ComplexQuestion], kind: str, output: str, resume: bool):
    config = state.config
    progress = _progress_path(output)
    done = 0
    if resume and progress.exists():
        done = json.loads(progress.read_text(encoding="utf-8"))["done"]
        logger.info("resuming %s after %d questions", output, done)

    async def examples_for(question: ComplexQuestion) -> List[Dict[str, Any]]:
        seed = question_seed(config.seed, question.id)
        if kind == "nextgen":
            chains = await decompose(question, registry, config, seed=seed)
            items = [e.to_dict() for e in emit_nextgen_examples(chains)]
        else:
            if not question.gold_answer:
                logger.warning("%s: no gold answer, skipped", question.id)
                return []
            search = config.search.model_copy(update={"seed": seed})
            chains = await sample_scorer_chains(question, registry, search, n0=config.datagen.scorer_sample_n0)
            items = [e.to_dict() for e in emit_scorer_examples(question, chains, config.datagen.scorer_f1_threshold)]
        if config.datagen.shuffle:
            random.Random(seed).shuffle(items)
        return items

    written = skipped = 0
    async with build_registry(config, state.base_dir) as registry:
        with open(output, "a" if done else "w", encoding="utf-8") as out:
            for batch in batches(questions[done:], config.jobs):
                results = await run_ordered(batch, examples_for, config.jobs)
                for items in results:
                    out.writelines(dump(item) for item in items)
                    written += len(items)
                    skipped += not items
                out.flush()
                done += len(batch)
                progress.write_text(json.dumps({"done": done, "emit": kind}), encoding="utf-8")
    progress.unlink(missing_ok=True)
    return written, skipped


@cli.command()
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--greedy", is_flag=True, help="Follow the single most likely question per step")
@click.option("-o", "--output", default="-", help="Output JSONL (default stdout)")
@click.pass_obj
def answer(state: State, dataset, greedy, output):
    """Answer questions and print explanation chains"""
    config = state.config
    try:
        questions = read_questions(dataset)
        config.check_endpoints(["squad_qa", "nextgen"], state.base_dir)
        records = asyncio.run(_answer(state, questions, greedy))
    except TmnError as e:
        fail(str(e))

    with click.open_file(output, "w", encoding="utf-8") as out:
        out.writelines(dump(r) for r in records)
    answered = sum(r["answer"] is not None for r in records)
    console.print(f"[green]✓ answered {answered} of {len(records)} questions[/green]")


async def _answer(state: State, questions: List[ComplexQuestion], greedy: bool) -> List[Dict[str, Any]]:
    config = state.config

    async def solve(question: ComplexQuestion) -> Dict[str, Any]:
        search = config.search.model_copy(
            update={"greedy": greedy or config.search.greedy, "seed": question_seed(config.seed, question.id)}
        )
        try:
            return (await answer_question(question, registry, search)).to_dict()
        except NoChainFound as e:
            logger.info("%s", e)
            return {"id": question.id, "answer": None, "score": None, "explored": e.explored, "chain": []}

    async with build_registry(config, state.base_dir) as registry:
        return await run_ordered(questions, solve, config.jobs)


@cli.command("eval")
@click.argument("predictions", type=click.Path(exists=True, dir_okay=False))
@click.argument("gold", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Machine-readable report on stdout")
@click.pass_obj
def eval_cmd(state: State, predictions, gold, as_json):
    """Score predictions against gold answers"""
    try:
        preds = read_jsonl(predictions, PredictionRecord)
        refs = read_jsonl(gold, GoldRecord)
        report = evaluate([p.model_dump() for p in preds], [g.model_dump() for g in refs])
    except TmnError as e:
        fail(str(e))

    summary = {
        "em": round(100 * report.em, 2),
        "f1": round(100 * report.f1, 2),
        "count": len(report.per_question),
        "per_class": {
            name: {"em": round(100 * m["em"], 2), "f1": round(100 * m["f1"], 2), "count": m["count"]}
            for name, m in report.per_class.items()
        },
    }
    if as_json:
        click.echo(json.dumps({**summary, "per_question": report.per_question}, ensure_ascii=False))
        return

    table = Table(title=f"{summary['count']} predictions")
    table.add_column("Subset", style="cyan")
    table.add_column("N", justify="right")
    table.add_column("EM", justify="right", style="green")
    table.add_column("F1", justify="right", style="green")
    table.add_row("all", str(summary["count"]), f"{summary['em']:.1f}", f"{summary['f1']:.1f}")
    for name, m in summary["per_class"].items():
        table.add_row(name, str(m["count"]), f"{m['em']:.1f}", f"{m['f1']:.1f}")
    console.print(table)


def main():
    cli()


if __name__ == "__main__":
    main()
